"""
Moment commands: empirical zero-count moments against Kac-Rice, and path simulation.
"""

import warnings

import numpy as np

from ..config import Config
from ..core.empirics import (
    MomentReport,
    critical_points_1d,
    doubling_stability,
    empirical_moments,
    sample_paths,
)
from ..core.gaussfield import CovKernel, DerivativeKernel, build_kernel, sample_field
from ..core.kacrice import FactorialIntegral, assemble_moment, factorial_moment_integral, rho1
from ..exceptions import MultijetWarning, ValidationError
from ..logging import get_logger
from ..types import Box, CommandResult, MomentsRequest, SimulateRequest

logger = get_logger(__name__)


def factorial_integrals(
    kernel: CovKernel,
    box: Box,
    p_max: int,
    seed: int,
    samples: int | None,
    config: Config,
    override_caps: bool = False,
) -> dict[int, FactorialIntegral]:
    """Integrals of rho_k over box^k for k <= p_max (k=3 only in dimension 1)."""
    top = p_max if kernel.n == 1 else min(p_max, 2)
    return {
        k: factorial_moment_integral(
            kernel,
            box,
            k,
            r=kernel.n,
            mc_samples=samples,
            seed=seed,
            config=config,
            override_caps=override_caps,
        )
        for k in range(1, top + 1)
    }


def compare_with_kacrice(
    report: MomentReport, integrals: dict[int, FactorialIntegral], n: int
) -> None:
    """Add factorial and raw moment comparisons against the Kac-Rice integrals."""
    values = {k: fi.value for k, fi in integrals.items()}
    errors = {k: fi.std_error for k, fi in integrals.items()}
    for k, fi in integrals.items():
        report.compare(f"factorial_{k}", report.moment(k, "factorial"), fi.value, fi.std_error)
    for p in range(1, report.p_max + 1):
        if all(k in values for k in range(1, p + 1)):
            value, se = assemble_moment(values, p, n, n, errors)
            report.compare(f"raw_{p}", report.moment(p, "raw"), value, se)


def _moment_tables(report: MomentReport) -> dict:
    return {
        "moments": (
            ["order", "kind", "empirical", "std_error"],
            [[r.order, r.kind, r.value, r.std_error] for r in report.rows],
        ),
        "comparisons": (
            ["name", "empirical", "reference", "empirical_se", "reference_se", "combined_se", "passed"],
            [
                [c.name, c.empirical, c.reference, c.empirical_se, c.reference_se, c.combined_se, c.passed]
                for c in report.comparisons
            ],
        ),
    }


def moments_impl(request: MomentsRequest, config: Config) -> CommandResult:
    """
    Implementation function for the moments command.

    Counts zeros of f (or of f' with ``critical_points``) over ``trials``
    sampled fields, then compares factorial and raw moments with the
    Kac-Rice integrals. Warnings raised on the way are serialised into the
    report with their codes.

    Raises:
        CapExceededError: Trials, grid or Monte Carlo sizes above the caps
    """
    kernel = build_kernel(request.kernel)
    if request.box.n != kernel.n:
        raise ValidationError("Box and kernel dimensions differ", field="box")
    options = dict(seed=request.seed, config=config, override_caps=request.override_caps)

    def run(trials: int) -> MomentReport:
        if request.critical_points:
            return critical_points_1d(kernel, request.box, trials, p_max=request.p_max, **options)
        return empirical_moments(kernel, request.box, request.p_max, trials, **options)

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", MultijetWarning)
        report = run(request.trials)
        integrals: dict[int, FactorialIntegral] = {}
        if request.kacrice and request.critical_points:
            density = rho1(DerivativeKernel(base=kernel), 1, **options)
            volume = request.box.volume
            report.compare(
                "critical_mean", report.moment(1, "raw"), density.value * volume, density.std_error * volume
            )
        elif request.kacrice:
            integrals = factorial_integrals(
                kernel, request.box, request.p_max, request.seed, request.samples, config, request.override_caps
            )
            compare_with_kacrice(report, integrals, kernel.n)
    report.warnings.extend(
        {"code": getattr(w.message, "code", "WARNING"), "message": str(w.message)} for w in caught
    )

    tables = _moment_tables(report)
    if integrals:
        tables["factorial_integrals"] = (
            ["k", "value", "std_error", "collar", "collar_width", "collar_slope"],
            [[k, f.value, f.std_error, f.collar, f.collar_width, f.collar_slope] for k, f in integrals.items()],
        )
    payload = {"kernel": kernel.spec(), "box": request.box.model_dump(), **report.to_dict()}
    if request.doubling:
        doubled = run(2 * request.trials)
        rows = doubling_stability(report, doubled)
        tables["doubling"] = (
            ["order", "kind", "value", "doubled", "drift", "combined_se", "stable"],
            [[r.order, r.kind, r.value, r.doubled, r.drift, r.combined_se, r.stable] for r in rows],
        )
        payload["doubling"] = {
            "label": "proxy for moment finiteness",
            "stable": all(r.stable for r in rows),
        }
    return CommandResult(tables=tables, report=payload)


def simulate_impl(request: SimulateRequest, config: Config) -> CommandResult:
    """
    Implementation function for the simulate command.

    For n=1 emits sampled paths with f and f' per grid node and their
    zeros; for n=2 emits field values on the grid.
    """
    kernel = build_kernel(request.kernel)
    if request.box.n != kernel.n:
        raise ValidationError("Box and kernel dimensions differ", field="box")
    if kernel.n == 1:
        paths = sample_paths(
            kernel, request.box, request.paths, request.seed, config, request.override_caps
        )
        values = [
            [i, float(x), float(f), float(df)]
            for i, path in enumerate(paths)
            for x, f, df in zip(path.grid, path.values, path.derivs)
        ]
        zeros = [
            [i, float(z), float(s)]
            for i, path in enumerate(paths)
            for z, s in zip(path.zeros.zeros, path.zeros.slopes)
        ]
        return CommandResult(
            tables={
                "paths": (["path", "x", "f", "df"], values),
                "zeros": (["path", "zero", "abs_derivative"], zeros),
            },
            report={"kernel": kernel.spec(), "paths": request.paths, "zero_counts": [p.zeros.count for p in paths]},
        )
    spacing = config.grid_spacing * 2.5
    axes = [
        np.linspace(lo, hi, max(int(np.ceil((hi - lo) / spacing)), 2) + 1)
        for lo, hi in zip(request.box.lower, request.box.upper)
    ]
    grid = np.array(np.meshgrid(*axes, indexing="ij")).reshape(kernel.n, -1).T
    sample = sample_field(
        kernel, grid, request.seed, draws=request.paths, config=config, override_caps=request.override_caps
    )
    field = sample.field()
    rows = [
        [i, *[float(c) for c in site], float(field[i, j])]
        for i in range(request.paths)
        for j, site in enumerate(grid)
    ]
    header = ["path", *[f"x{k + 1}" for k in range(kernel.n)], "f"]
    return CommandResult(
        tables={"paths": (header, rows)},
        report={"kernel": kernel.spec(), "paths": request.paths, "sites": grid.shape[0]},
    )
