#!/usr/bin/env python3
"""
multijet - Main entry point for the command-line interface.

Every command reads an optional experiment config (JSON or YAML), applies
the command-line flags on top, validates the result against the command's
request model and runs the matching ``*_impl`` function. Tables are written
as CSV, the report as JSON, and a run manifest records digests and wall time.
"""

import json
import sys
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

import click
import pydantic
import yaml
from click.exceptions import NoArgsIsHelpError

from . import __version__
from .config import Config, load_config
from .context import init_context
from .exceptions import EXIT_INPUT_ERROR, AcceptanceFailure, ConfigurationError, MultijetError
from .logging import configure_logging, get_logger, log_command_execution
from .tools.fields import nondeg_impl, rho_impl
from .tools.geometry import kernel_impl, limit_impl
from .tools.interp import divdiff_impl, kergin_impl
from .tools.moments import moments_impl, simulate_impl
from .tools.validate import validate_impl
from .types import (
    CommandResult,
    DivdiffRequest,
    KernelRequest,
    KerginRequest,
    LimitRequest,
    MomentsRequest,
    NondegRequest,
    RhoRequest,
    RunManifest,
    SimulateRequest,
    ValidateRequest,
)
from .utils.output import config_hash, file_digest, render_json, write_csv, write_json
from .utils.points import parse_floats

logger = get_logger(__name__)


def load_experiment(path: Path | None) -> dict[str, Any]:
    """
    Read an experiment config file.

    Raises:
        ConfigurationError: If the file is unreadable or not a mapping
    """
    if path is None:
        return {}
    try:
        text = path.read_text(encoding="utf-8")
        data = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (OSError, ValueError, yaml.YAMLError) as e:
        raise ConfigurationError(f"Cannot read experiment config: {e}", setting=str(path)) from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigurationError("Experiment config must be a mapping", setting=str(path))
    return data


def _parse_json(value: str | None, option: str) -> Any:
    if value is None:
        return None
    try:
        return json.loads(value)
    except ValueError as e:
        raise click.BadParameter(f"invalid JSON: {e}", param_hint=option) from e


def _parse_float_list(value: str | None, option: str) -> list[float] | None:
    if value is None:
        return None
    try:
        return parse_floats(value)
    except MultijetError as e:
        raise click.BadParameter(e.message, param_hint=option) from e


def _kernel_spec(opts: dict[str, Any]) -> dict[str, Any] | None:
    name = opts.pop("kernel", None)
    n = opts.pop("n", None)
    parameters = {
        "max_jet": opts.pop("max_jet", None),
        "variance": opts.pop("variance", None),
        "atoms": _parse_json(opts.pop("atoms", None), "--atoms"),
        "weights": _parse_float_list(opts.pop("weights", None), "--weights"),
    }
    if name is None:
        return None
    spec: dict[str, Any] = {"name": name, "parameters": {k: v for k, v in parameters.items() if v is not None}}
    if n is not None:
        spec["n"] = n
    return spec


def _box(opts: dict[str, Any]) -> dict[str, Any] | None:
    lower = _parse_float_list(opts.pop("lower", None), "--lower")
    upper = _parse_float_list(opts.pop("upper", None), "--upper")
    if lower is None and upper is None:
        return None
    if lower is None or upper is None:
        raise click.BadParameter("--lower and --upper must be given together", param_hint="--box")
    return {"lower": lower, "upper": upper}


def _write_outputs(
    out: Path, command: str, result: CommandResult, digest: str, seed: int, started: float
) -> None:
    outputs = {}
    for name, (header, rows) in result.tables.items():
        path = write_csv(out / f"{name}.csv", header, rows, digest)
        outputs[path.name] = file_digest(path)
    report_path = write_json(out / "report.json", result.report)
    outputs[report_path.name] = file_digest(report_path)
    manifest = RunManifest(
        tool_version=__version__,
        command=command,
        config_sha256=digest,
        seed=seed,
        wall_time_s=round(time.time() - started, 6),
        created_at=datetime.now(timezone.utc).isoformat(),
        outputs=outputs,
    )
    write_json(out / "manifest.json", manifest.model_dump())


def run_command(command: str, request_cls: type, impl, options: dict[str, Any], payload: dict[str, Any]) -> None:
    """
    Validate, execute and emit one command.

    Args:
        command: Command name
        request_cls: Request model of the command
        impl: ``impl(request, config) -> CommandResult``
        options: Common options (config file, out, threads, log level)
        payload: Command fields given on the command line (None = not given)
    """
    started = time.time()
    out: Path | None = options["out"]
    try:
        config: Config = load_config(threads=options["threads"], log_level=options["log_level"])
        configure_logging(config)
        init_context(config.threads, config.chunk_size)

        data = load_experiment(options["config_file"])
        data.update({k: v for k, v in payload.items() if v is not None})
        request = request_cls.model_validate(data)

        result = impl(request, config)
        digest = config_hash({**config.model_dump(), **request.model_dump(), "command": command})
        if out is not None:
            _write_outputs(out, command, result, digest, request.seed, started)
        else:
            click.echo(render_json(result.report), nl=False)
        log_command_execution(
            logger,
            command,
            request.model_dump(mode="json"),
            duration_ms=round((time.time() - started) * 1000, 3),
            success=not result.failures,
        )
        if result.failures:
            raise AcceptanceFailure(result.failures)

    except pydantic.ValidationError as e:
        logger.error("Invalid experiment config", command=command, errors=e.errors(include_url=False))
        _emit_error(out, {"code": "VALIDATION_ERROR", "message": str(e), "details": {}})
        sys.exit(EXIT_INPUT_ERROR)
    except MultijetError as e:
        logger.error("Command failed", command=command, code=e.code, error=e.message)
        if not isinstance(e, AcceptanceFailure):
            _emit_error(out, e.to_dict())
        sys.exit(e.exit_code)


def _emit_error(out: Path | None, error: dict[str, Any]) -> None:
    if out is not None:
        write_json(out / "report.json", {"error": error})


def common_options(func):
    """Options shared by every command."""
    func = click.option(
        "--config",
        "config_file",
        type=click.Path(exists=True, dir_okay=False, path_type=Path),
        help="Experiment config (JSON or YAML); flags override its fields",
    )(func)
    func = click.option("--seed", type=click.IntRange(0, 2**64 - 1), help="Root seed (u64)")(func)
    func = click.option(
        "--out",
        type=click.Path(file_okay=False, path_type=Path),
        help="Output directory for CSV tables, report.json and manifest.json",
    )(func)
    func = click.option("--threads", type=click.IntRange(1, 256), help="Worker threads")(func)
    func = click.option(
        "--override-caps", is_flag=True, default=None, help="Allow runs above desk-scale caps"
    )(func)
    func = click.option(
        "--log-level",
        type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"], case_sensitive=False),
        help="Set logging level",
    )(func)
    return func


def kernel_options(func):
    """Covariance kernel options."""
    func = click.option(
        "--kernel", type=click.Choice(["bargmann_fock", "berry", "spectral"]), help="Kernel family"
    )(func)
    func = click.option("--n", type=click.IntRange(1, 3), help="Domain dimension")(func)
    func = click.option("--max-jet", type=click.IntRange(0, 8), help="Largest jet order supported")(func)
    func = click.option("--variance", type=float, help="Kernel variance r(0)")(func)
    func = click.option("--atoms", help="Spectral atoms as JSON, e.g. '[[1.0], [-1.0]]'")(func)
    func = click.option("--weights", help="Spectral weights, e.g. '1,1'")(func)
    return func


def box_options(func):
    """Box options."""
    func = click.option("--lower", help="Lower corner, e.g. '0' or '0,0'")(func)
    func = click.option("--upper", help="Upper corner, e.g. '1' or '1,1'")(func)
    return func


def function_options(func):
    """Function registry options."""
    func = click.option(
        "--function", "function_name", help="poly, monomial, sin, cos, exp or gaussian"
    )(func)
    func = click.option("--n", type=click.IntRange(1, 6), help="Ambient dimension")(func)
    func = click.option("--coeffs", help="Graded-lex coefficients (poly)")(func)
    func = click.option("--exponents", help="Exponents (monomial), e.g. '2,1'")(func)
    func = click.option("--direction", help="Direction of the affine argument (sin/cos/exp)")(func)
    func = click.option("--offset", type=float, help="Offset of the affine argument")(func)
    func = click.option("--scale", type=float, help="Overall multiplicative constant")(func)
    func = click.option("--points", help="Point list, e.g. '0,0,1' or '(0,0);(0,1)'")(func)
    return func


def _split_common(opts: dict[str, Any]) -> tuple[dict[str, Any], dict[str, Any]]:
    common = {key: opts.pop(key) for key in ("config_file", "out", "threads", "log_level")}
    payload = {"seed": opts.pop("seed"), "override_caps": opts.pop("override_caps")}
    return common, payload


def _function_payload(opts: dict[str, Any]) -> dict[str, Any]:
    name = opts.pop("function_name")
    spec = {
        "n": opts.pop("n"),
        "coeffs": _parse_float_list(opts.pop("coeffs"), "--coeffs"),
        "exponents": _parse_float_list(opts.pop("exponents"), "--exponents"),
        "direction": _parse_float_list(opts.pop("direction"), "--direction"),
        "offset": opts.pop("offset"),
        "scale": opts.pop("scale"),
    }
    if spec["exponents"] is not None:
        spec["exponents"] = [int(e) for e in spec["exponents"]]
    if name is None:
        return {"points": opts.pop("points")}
    spec = {"name": name, **{k: v for k, v in spec.items() if v is not None}}
    return {"function": spec, "points": opts.pop("points")}


class MultijetGroup(click.Group):
    """Command group whose usage errors exit with the input-error code."""

    def make_context(self, info_name, args, parent=None, **extra) -> click.Context:
        try:
            return super().make_context(info_name, args, parent=parent, **extra)
        except NoArgsIsHelpError:
            raise
        except click.UsageError as e:
            e.exit_code = EXIT_INPUT_ERROR
            raise

    def invoke(self, ctx: click.Context) -> Any:
        try:
            return super().invoke(ctx)
        except click.UsageError as e:
            e.exit_code = EXIT_INPUT_ERROR
            raise


@click.group(cls=MultijetGroup)
@click.version_option(__version__, prog_name="multijet")
def cli() -> None:
    """
    multijet: multijets, Kergin interpolation and Kac-Rice moments

    \b
    Commands:
      divdiff, kergin   divided differences and Kergin interpolation
      kernel, limit     evaluation kernels over configuration space
      nondeg, rho       jet non-degeneracy and Kac-Rice densities
      moments           empirical zero-count moments vs Kac-Rice
      simulate          plot-ready sampled paths
      validate          the acceptance suite

    \b
    Examples:
      multijet kergin --function monomial --exponents 3 --points 0,0,1
      multijet rho --kernel bargmann_fock --n 1
      multijet moments --kernel bargmann_fock --lower 0 --upper 1 --out runs/bf
      multijet validate --trials 1000 --samples 20000

    Exit codes: 0 success, 2 validation failure, 3 input error,
    4 numerical degeneracy.
    """


@cli.command()
@common_options
@function_options
def divdiff(**opts) -> None:
    """Divided difference f[x0, ..., xk] as a symmetric form."""
    common, payload = _split_common(opts)
    run_command("divdiff", DivdiffRequest, divdiff_impl, common, {**payload, **_function_payload(opts)})


@cli.command()
@common_options
@function_options
def kergin(**opts) -> None:
    """Kergin interpolation polynomial K(f, x) and its residual table."""
    common, payload = _split_common(opts)
    run_command("kergin", KerginRequest, kergin_impl, common, {**payload, **_function_payload(opts)})


@cli.command()
@common_options
@click.option("--n", type=click.IntRange(1, 3), help="Ambient dimension")
@click.option("--points", help="Configuration, e.g. '(0,0);(0,1)'")
@click.option("--cells", help="Partition as JSON, e.g. '[[0,1],[2]]'")
def kernel(**opts) -> None:
    """Kernel G(x) of the evaluation map on R_{p-1}[X]."""
    common, payload = _split_common(opts)
    payload.update(n=opts["n"], points=opts["points"], cells=_parse_json(opts["cells"], "--cells"))
    run_command("kernel", KernelRequest, kernel_impl, common, payload)


@cli.command()
@common_options
@click.option("--path", type=click.Choice(["spiral", "symmetric", "constant"]), help="Named path")
@click.option("--eps", help="Decreasing epsilons, e.g. '1e-1,1e-2,1e-3'")
def limit(**opts) -> None:
    """Follow G(path(eps)) toward the diagonal."""
    common, payload = _split_common(opts)
    payload.update(path=opts["path"], epsilons=_parse_float_list(opts["eps"], "--eps"))
    run_command("limit", LimitRequest, limit_impl, common, payload)


@cli.command()
@common_options
@kernel_options
@click.option("--order", type=click.IntRange(0, 4), help="Jet order q")
@click.option("--components", type=click.IntRange(1, 3), help="Independent components r")
def nondeg(**opts) -> None:
    """Certify (or refute) non-degeneracy of the q-jet of the field."""
    common, payload = _split_common(opts)
    payload.update(kernel=_kernel_spec(opts), order=opts["order"], components=opts["components"])
    run_command("nondeg", NondegRequest, nondeg_impl, common, payload)


@cli.command()
@common_options
@kernel_options
@click.option("--components", type=click.IntRange(1, 3), help="Field components r")
@click.option("--points", help="Sites for rho_p; rho_1 at 0 if absent")
@click.option("--samples", type=click.IntRange(min=100), help="Monte Carlo samples")
@click.option("--eps-grid", help="Diagonal scaling grid, e.g. '1e-3,1e-2,1e-1'")
def rho(**opts) -> None:
    """Kac-Rice densities rho_1 and rho_p."""
    common, payload = _split_common(opts)
    payload.update(
        kernel=_kernel_spec(opts),
        components=opts["components"],
        points=opts["points"],
        samples=opts["samples"],
        eps_grid=_parse_float_list(opts["eps_grid"], "--eps-grid"),
    )
    run_command("rho", RhoRequest, rho_impl, common, payload)


@cli.command()
@common_options
@kernel_options
@box_options
@click.option("--p", "p_max", type=click.IntRange(1, 3), help="Highest moment order")
@click.option("--trials", type=click.IntRange(min=10), help="Sampled fields")
@click.option("--samples", type=click.IntRange(min=100), help="Monte Carlo samples per density")
@click.option("--critical-points", is_flag=True, default=None, help="Count zeros of f' (n=1)")
@click.option("--kacrice/--no-kacrice", default=None, help="Compute Kac-Rice references")
@click.option("--doubling", is_flag=True, default=None, help="Re-run with doubled trials")
def moments(**opts) -> None:
    """Empirical zero-count moments compared with Kac-Rice integrals."""
    common, payload = _split_common(opts)
    payload.update(kernel=_kernel_spec(opts), box=_box(opts), **opts)
    run_command("moments", MomentsRequest, moments_impl, common, payload)


@cli.command()
@common_options
@kernel_options
@box_options
@click.option("--paths", type=click.IntRange(1, 100), help="Number of sampled paths")
def simulate(**opts) -> None:
    """Plot-ready CSV of sampled paths and their zeros."""
    common, payload = _split_common(opts)
    payload.update(kernel=_kernel_spec(opts), box=_box(opts), **opts)
    run_command("simulate", SimulateRequest, simulate_impl, common, payload)


@cli.command()
@common_options
@click.option("--trials", type=click.IntRange(min=100), help="Trials for empirical checks")
@click.option("--samples", type=click.IntRange(min=100), help="Monte Carlo samples")
@click.option("--only", help="Subset of criteria, e.g. '1,7,12'")
def validate(**opts) -> None:
    """Run the acceptance suite; exits 2 if any check fails."""
    common, payload = _split_common(opts)
    only = _parse_float_list(opts["only"], "--only")
    payload.update(
        trials=opts["trials"],
        samples=opts["samples"],
        only=[int(c) for c in only] if only is not None else None,
    )
    run_command("validate", ValidateRequest, validate_impl, common, payload)


def main(args: list[str] | None = None) -> int:
    """
    Main entry point for testing and programmatic usage.

    Args:
        args: Command line arguments

    Returns:
        Exit code
    """
    try:
        if args is None:
            cli()
        else:
            cli(args=args, standalone_mode=False)
        return 0
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 0
    except click.ClickException as e:
        e.show()
        return e.exit_code
    except Exception:
        logger.exception("Unexpected error")
        return 1


if __name__ == "__main__":
    sys.exit(main())
