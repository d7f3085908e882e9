"""
Evaluation-kernel commands: the kernel G(x) of a configuration and diagonal limit probes.
"""

import numpy as np

from ..config import Config
from ..core.configspace import (
    PATHS,
    Configuration,
    Partition,
    Subspace,
    ev_kernel,
    limit_probe,
    partition_intersection_check,
    rotated_line_kernel,
)
from ..core.polycore import monomial_exponents
from ..logging import get_logger
from ..types import CommandResult, KernelRequest, LimitRequest
from ..utils.output import exponent_label
from ..utils.points import parse_points

logger = get_logger(__name__)

# Limits of G along the built-in paths, all in R_1[X] with n=2.
EXPECTED_LIMITS = {
    "spiral": rotated_line_kernel(0.0),
    "symmetric": rotated_line_kernel(0.0),
    "constant": rotated_line_kernel(np.pi / 2),
}


def oriented_basis(G: Subspace) -> np.ndarray:
    """Basis columns with the sign fixed so that the largest entry is positive."""
    basis = G.basis.copy()
    for j in range(basis.shape[1]):
        if basis[np.argmax(np.abs(basis[:, j])), j] < 0:
            basis[:, j] *= -1
    return basis


def _basis_rows(G: Subspace, n: int, degree: int) -> list[list]:
    exps = monomial_exponents(n, degree)
    basis = oriented_basis(G)
    return [
        [j, i, exponent_label(exps[i]), float(basis[i, j])]
        for j in range(basis.shape[1])
        for i in range(basis.shape[0])
    ]


def kernel_impl(request: KernelRequest, config: Config) -> CommandResult:
    """
    Implementation function for the kernel command.

    Returns:
        Table ``kernel_basis`` with an orthonormal basis of G(x) and, when
        cells are given, table ``intersection`` comparing G(x) with the
        intersection of the cluster kernels

    Raises:
        RankDeficientError: If the configuration is on (or near) the large diagonal
    """
    pts = parse_points(request.points, request.n)
    diameter = Configuration(pts).diameter
    configuration = Configuration(pts, cluster_tol=config.cluster_tol_factor * (diameter + 1.0))
    G = ev_kernel(configuration)
    tables = {
        "kernel_basis": (
            ["vector", "index", "exponent", "coefficient"],
            _basis_rows(G, configuration.n, configuration.p - 1),
        )
    }
    report = {"n": configuration.n, "p": configuration.p, "dim": G.dim, "codim": G.codim}
    if request.cells is not None:
        check = partition_intersection_check(configuration, Partition.of(request.cells))
        tables["intersection"] = (
            ["cell", "codim", "containment_residual"],
            [
                [exponent_label(sorted(cell)), codim, residual]
                for cell, codim, residual in zip(
                    Partition.of(request.cells), check.codims, check.containment_residuals
                )
            ],
        )
        report["intersection"] = {
            "codim_sum": check.codim_sum,
            "expected_codim": check.expected_codim,
            "distance": check.distance,
            "transversality_gap": check.transversality_gap,
            "passed": check.passed(),
        }
    logger.info("Computed evaluation kernel", p=configuration.p, n=configuration.n, dim=G.dim)
    return CommandResult(tables=tables, report=report)


def limit_impl(request: LimitRequest, config: Config) -> CommandResult:
    """
    Implementation function for the limit command.

    Returns:
        Table ``limit`` with, per eps, the angle of G(path(eps)) to the
        expected limit, the Cauchy increment and the kernel basis vector
    """
    expected = EXPECTED_LIMITS[request.path]
    rows = limit_probe(PATHS[request.path], request.epsilons, expected)
    exps = monomial_exponents(2, 1)
    table = []
    for row in rows:
        vector = oriented_basis(row.subspace)[:, 0]
        table.append(
            [row.eps, row.angle_to_expected, row.increment, *[float(v) for v in vector]]
        )
    coefficient_columns = ["coef_" + "_".join(str(int(e)) for e in a) for a in exps]
    header = ["eps", "angle_to_limit", "increment", *coefficient_columns]
    final = rows[-1]
    logger.info("Probed diagonal limit", path=request.path, final_angle=final.angle_to_expected)
    return CommandResult(
        tables={"limit": (header, table)},
        report={
            "path": request.path,
            "expected_limit": oriented_basis(expected)[:, 0],
            "final_angle": final.angle_to_expected,
            "max_increment": max((r.increment for r in rows if r.increment is not None), default=0.0),
        },
    )
