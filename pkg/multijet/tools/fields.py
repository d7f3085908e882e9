"""
Gaussian-field commands: non-degeneracy certificates and Kac-Rice densities.
"""

from ..config import Config
from ..core.gaussfield import build_kernel, helmholtz_alignment, nondegeneracy_check
from ..core.kacrice import diagonal_scaling_probe, rho1, rho_p
from ..logging import get_logger
from ..types import CommandResult, NondegRequest, RhoRequest
from ..utils.output import exponent_label
from ..utils.points import parse_points

logger = get_logger(__name__)


def nondeg_impl(request: NondegRequest, config: Config) -> CommandResult:
    """
    Implementation function for the nondeg command.

    Returns:
        Tables ``eigenvalues`` and ``null_vector`` (eigenvector of the
        smallest eigenvalue, indexed by component and multi-index)

    Raises:
        SmoothnessError: If the order exceeds the kernel's max_jet
    """
    kernel = build_kernel(request.kernel)
    report = nondegeneracy_check(
        kernel, request.order, request.components, threshold=config.certification_threshold
    )
    na = len(report.alphas)
    null_rows = [
        [i // na, exponent_label(report.alphas[i % na]), value]
        for i, value in enumerate(report.null_vector)
    ]
    logger.info(
        "Certified non-degeneracy" if report.certified else "Jet covariance is degenerate",
        kernel=kernel.name,
        order=request.order,
        min_eigenvalue=report.min_eigenvalue,
    )
    return CommandResult(
        tables={
            "eigenvalues": (["index", "eigenvalue"], list(enumerate(report.eigenvalues))),
            "null_vector": (["component", "exponent", "coefficient"], null_rows),
        },
        report={
            "kernel": kernel.spec(),
            "order": request.order,
            "components": request.components,
            "min_eigenvalue": report.min_eigenvalue,
            "certified": report.certified,
            "threshold": config.certification_threshold,
            "helmholtz_alignment": helmholtz_alignment(report),
        },
    )


def rho_impl(request: RhoRequest, config: Config) -> CommandResult:
    """
    Implementation function for the rho command.

    Without points this is rho_1 at the origin; with p points it is rho_p
    at that configuration. An ``eps_grid`` adds the diagonal scaling probe
    of rho_2(0, eps e1) for the scalar field.

    Raises:
        DegenerateConditioningError: If the values cannot be conditioned on
    """
    kernel = build_kernel(request.kernel)
    options = dict(
        mc_samples=request.samples,
        seed=request.seed,
        config=config,
        override_caps=request.override_caps,
    )
    if request.points is None:
        estimate = rho1(kernel, request.components, **options)
        p = 1
    else:
        pts = parse_points(request.points, kernel.n)
        estimate = rho_p(kernel, pts, request.components, **options)
        p = pts.shape[0]
    tables = {
        "rho": (
            ["p", "value", "std_error", "samples", "method"],
            [[p, estimate.value, estimate.std_error, estimate.samples, estimate.method]],
        )
    }
    report = {"kernel": kernel.spec(), "components": request.components, "p": p, **vars(estimate)}
    if request.eps_grid:
        probe = diagonal_scaling_probe(kernel, request.eps_grid, **options)
        tables["scaling"] = (
            ["eps", "value", "std_error", "stable"],
            [[row.eps, row.value, row.std_error, row.stable] for row in probe.rows],
        )
        report["scaling"] = {
            "slope": probe.slope,
            "slope_se": probe.slope_se,
            "intercept": probe.intercept,
            "conditioning_floor": probe.floor,
            "expected_slope": 1.0 if kernel.n == 1 else -1.0,
        }
    return CommandResult(tables=tables, report=report)
