"""
Divided difference and Kergin interpolation commands.

Both commands take a function from the built-in registry and a point list,
and emit coefficients in graded-lex order. Kergin runs also emit the
interpolation-property residuals: for every non-empty subset J of the
points, the largest coefficient gap between f[x_J] and K[x_J].
"""

from itertools import combinations

import numpy as np

from ..config import Config
from ..core.functions import FnOracle, build_function
from ..core.interp import divdiff_1d_classical, divided_difference, kergin
from ..logging import get_logger
from ..types import CommandResult, DivdiffRequest, KerginRequest
from ..utils.output import exponent_label
from ..utils.points import parse_points

logger = get_logger(__name__)

MAX_RESIDUAL_SUBSETS = 63


def divdiff_impl(request: DivdiffRequest, config: Config) -> CommandResult:
    """
    Implementation function for the divdiff command.

    Args:
        request: Function spec and point list
        config: Configuration instance

    Returns:
        Table ``divdiff`` with the coefficients of f[x0, ..., xk]

    Raises:
        UnknownFunctionError: If the function is not in the registry
        SmoothnessError: If f has fewer than k derivatives
    """
    f = build_function(request.function)
    pts = parse_points(request.points, f.n)
    form = divided_difference(f, pts, config=config)
    rows = [
        [i, exponent_label(alpha), float(c)]
        for i, (alpha, c) in enumerate(zip(form.exponents, form.coeffs))
    ]
    report = {"function": request.function.name, "n": f.n, "order": form.k, "points": pts}
    if f.n == 1:
        report["classical"] = divdiff_1d_classical(pts[:, 0], f)
    logger.info("Computed divided difference", order=form.k, n=f.n)
    return CommandResult(
        tables={"divdiff": (["index", "exponent", "coefficient"], rows)}, report=report
    )


def _residual_rows(f: FnOracle, K: FnOracle, pts: np.ndarray, config: Config) -> list[list]:
    rows = []
    p = pts.shape[0]
    for size in range(1, p + 1):
        for subset in combinations(range(p), size):
            if len(rows) >= MAX_RESIDUAL_SUBSETS:
                return rows
            sub = pts[list(subset)]
            gap = divided_difference(f, sub, config=config).coeffs - divided_difference(K, sub).coeffs
            rows.append([exponent_label(subset), size - 1, float(np.max(np.abs(gap)))])
    return rows


def kergin_impl(request: KerginRequest, config: Config) -> CommandResult:
    """
    Implementation function for the kergin command.

    Returns:
        Tables ``kergin`` (coefficients of K(f, x)) and ``residuals``
        (subset divided-difference gaps)
    """
    f = build_function(request.function)
    pts = parse_points(request.points, f.n)
    K = kergin(f, pts, config=config)
    coefficients = [
        [i, exponent_label(alpha), float(c)]
        for i, (alpha, c) in enumerate(zip(K.exponents, K.coeffs))
    ]
    residuals = _residual_rows(f, FnOracle.from_poly(K, name="kergin"), pts, config)
    max_residual = max(row[2] for row in residuals)
    logger.info("Computed Kergin polynomial", p=pts.shape[0], n=f.n, max_residual=max_residual)
    return CommandResult(
        tables={
            "kergin": (["index", "exponent", "coefficient"], coefficients),
            "residuals": (["subset", "order", "max_abs_residual"], residuals),
        },
        report={
            "function": request.function.name,
            "n": f.n,
            "p": pts.shape[0],
            "degree": pts.shape[0] - 1,
            "max_residual": max_residual,
        },
    )
