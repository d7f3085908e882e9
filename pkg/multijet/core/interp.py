"""
Divided differences and Kergin interpolation.

The divided difference f[x0, ..., xk] is the symmetric k-linear form

    f[x0, ..., xk] = integral over the k-simplex of D^k f at sum_j t_j x_j,

with the simplex carrying mass 1/k!. For polynomial f the integrand is a
polynomial in t and an exact Grundmann-Moller rule is used; other oracles go
through adaptive simplex quadrature. Repeated points need no special
treatment, the integral is already defined on the diagonal.

The Kergin polynomial of f at x1, ..., xp is

    K(f, x) = sum_{k=1}^{p} f[x1, ..., xk](X - x1, ..., X - x_{k-1}).
"""

import math
from collections.abc import Mapping, Sequence

import numpy as np

from ..config import Config
from ..exceptions import DimensionMismatchError, MissingJetDataError, ValidationError
from ..logging import get_logger
from ..utils.cache import memoized, shared_cache
from .functions import FnOracle
from .polycore import (
    Poly,
    SymForm,
    basis_size,
    monomial_exponents,
    shifted_identity,
    symform_apply,
)
from .quadrature import adaptive_integrate, rule_for_degree

logger = get_logger(__name__)

DEFAULT_TOL = 1e-9


def _as_points(points: "np.ndarray | Sequence", n: int | None = None) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None] if n in (None, 1) else pts[None, :]
    if pts.shape[0] == 0:
        raise ValidationError("At least one point is required", field="points")
    if n is not None and pts.shape[1] != n:
        raise DimensionMismatchError(n, pts.shape[1], field="points")
    return pts


def divided_difference(
    f: FnOracle,
    points: "np.ndarray | Sequence",
    tol: float | None = None,
    max_depth: int | None = None,
    config: Config | None = None,
) -> SymForm:
    """
    The divided difference f[x0, ..., xk] as a symmetric form of order k.

    Args:
        f: Oracle with derivatives up to order k
        points: k+1 points of R^n, shape (k+1, n)
        tol: Absolute tolerance of adaptive quadrature (non-polynomial f)
        max_depth: Maximum bisection depth of adaptive quadrature
        config: Supplies tol and max_depth when they are not given

    Raises:
        ValidationError: Empty point list
        SmoothnessError: f has fewer than k derivatives
    """
    pts = _as_points(points, f.n)
    k = pts.shape[0] - 1
    f.require(k)
    if k == 0:
        return SymForm.scalar(f.n, f(pts[0]))

    def integrand(bary: np.ndarray) -> np.ndarray:
        return f.differential(k, bary @ pts)

    if f.polynomial_degree is not None:
        rule = rule_for_degree(k, max(f.polynomial_degree - k, 0))
        coeffs = rule.integrate(integrand)
    else:
        if tol is None:
            tol = config.quadrature_tol if config else DEFAULT_TOL
        if max_depth is None:
            max_depth = config.quadrature_max_depth if config else 24
        coeffs = adaptive_integrate(integrand, k, tol=tol, max_depth=max_depth).value
    return SymForm(f.n, k, coeffs)


def coincident_form(f: FnOracle, x: np.ndarray, k: int) -> SymForm:
    """f[x, ..., x] (k+1 copies) computed directly as D^k_x f / k!."""
    x = np.asarray(x, dtype=float)
    coeffs = f.differential(k, x[None, :])[0] / math.factorial(k)
    return SymForm(f.n, k, coeffs)


def _jet_lookup(
    jets: "Mapping[float, Sequence[float]] | FnOracle", z: float, order: int
) -> float:
    if isinstance(jets, FnOracle):
        if jets.n != 1:
            raise DimensionMismatchError(1, jets.n, field="n")
        return jets.deriv((order,), np.array([z]))
    for key, values in jets.items():
        if float(key) == z:
            if order >= len(values):
                raise MissingJetDataError(
                    f"Derivative of order {order} at {z} is needed for a repeated point",
                    point=z,
                    order=order,
                )
            return float(values[order])
    raise MissingJetDataError(f"No data at point {z}", point=z, order=order)


def newton_table(
    points: Sequence[float], jets: "Mapping[float, Sequence[float]] | FnOracle"
) -> tuple[np.ndarray, np.ndarray]:
    """
    Hermite-extended Newton divided-difference table in one variable.

    Args:
        points: Interpolation nodes, repeats meaning derivative data
        jets: Either an oracle or {point: [f, f', f'', ...]}

    Returns:
        (sorted nodes, top row f[z0], f[z0,z1], ..., f[z0..zk])
    """
    z = np.sort(np.asarray(points, dtype=float).reshape(-1))
    if z.size == 0:
        raise ValidationError("At least one point is required", field="points")
    m = z.size
    table = np.zeros((m, m))
    for i in range(m):
        table[i, 0] = _jet_lookup(jets, z[i], 0)
    for j in range(1, m):
        for i in range(m - j):
            if z[i + j] == z[i]:
                table[i, j] = _jet_lookup(jets, z[i], j) / math.factorial(j)
            else:
                table[i, j] = (table[i + 1, j - 1] - table[i, j - 1]) / (z[i + j] - z[i])
    return z, table[0].copy()


def divdiff_1d_classical(
    points: Sequence[float], jets: "Mapping[float, Sequence[float]] | FnOracle"
) -> float:
    """Classical recursive (Hermite-extended) divided difference f[x0, ..., xk]."""
    _, top = newton_table(points, jets)
    return float(top[-1])


def newton_reconstruct(forms: Sequence[SymForm], anchors: "np.ndarray | Sequence") -> Poly:
    """
    Inverse of the Newton-form map: sum_j S_j(X - x1, ..., X - xj).

    Args:
        forms: S_0, ..., S_{p-1} with S_j of order j
        anchors: at least p-1 anchor points x1, ..., x_{p-1}

    Raises:
        ValidationError: If S_j does not have order j
    """
    if not forms:
        raise ValidationError("At least one form is required", field="forms")
    n = forms[0].n
    p = len(forms)
    pts = _as_points(anchors, n) if p > 1 else np.zeros((0, n))
    if pts.shape[0] < p - 1:
        raise ValidationError(
            f"{p} forms need {p - 1} anchor points, got {pts.shape[0]}", field="anchors"
        )
    shifts = [shifted_identity(n, x) for x in pts]
    result = Poly.zero(n, p - 1)
    for j, S in enumerate(forms):
        if S.k != j:
            raise ValidationError(
                f"Form at position {j} has order {S.k}, expected {j}", field="forms"
            )
        if S.n != n:
            raise DimensionMismatchError(n, S.n, field="forms")
        result = result + symform_apply(S, shifts[:j])
    return result.with_degree(p - 1)


def newton_forms(f: FnOracle, points: "np.ndarray | Sequence", **kwargs) -> list[SymForm]:
    """The forms (f[x1, ..., x_{j+1}])_{0 <= j < p} of the Kergin isomorphism."""
    pts = _as_points(points, f.n)
    return [divided_difference(f, pts[: j + 1], **kwargs) for j in range(pts.shape[0])]


def kergin(f: FnOracle, points: "np.ndarray | Sequence", **kwargs) -> Poly:
    """
    Kergin polynomial K(f, x) of degree <= p-1.

    Args:
        f: Oracle with derivatives up to order p-1
        points: p points, shape (p, n); repeats allowed
        **kwargs: Forwarded to divided_difference

    Raises:
        SmoothnessError: If f has fewer than p-1 derivatives
    """
    pts = _as_points(points, f.n)
    f.require(pts.shape[0] - 1)
    return newton_reconstruct(newton_forms(f, pts, **kwargs), pts[:-1])


@memoized(shared_cache)
def _kergin_operator_cached(point_bytes: bytes, shape: tuple[int, int], degree: int) -> np.ndarray:
    pts = np.frombuffer(point_bytes, dtype=float).reshape(shape)
    p, n = shape
    columns = []
    for alpha in monomial_exponents(n, degree):
        P = Poly.from_terms(n, {tuple(int(e) for e in alpha): 1.0}, d=degree)
        columns.append(kergin(FnOracle.from_poly(P), pts).coeffs)
    matrix = np.column_stack(columns)
    matrix.setflags(write=False)
    return matrix


def kergin_operator(points: "np.ndarray | Sequence", degree: int, n: int | None = None) -> np.ndarray:
    """
    Matrix of P -> K(P, x) from R_degree[X] to R_{p-1}[X].

    Columns follow the graded-lex basis of R_degree[X], rows that of
    R_{p-1}[X]. Memoised on the exact point coordinates.
    """
    pts = np.ascontiguousarray(_as_points(points, n), dtype=float)
    return _kergin_operator_cached(pts.tobytes(), pts.shape, degree)


def kergin_compatibility_matrix(
    points: "np.ndarray | Sequence", cells: Sequence[Sequence[int]]
) -> np.ndarray:
    """
    Stacked matrix of P -> (K(P, x_I))_I on R_{p-1}[X].

    Args:
        points: p points, shape (p, n)
        cells: Index sets I (0-based) of a partition of range(p)
    """
    pts = _as_points(points)
    p = pts.shape[0]
    blocks = [kergin_operator(pts[sorted(cell)], p - 1) for cell in cells]
    return np.vstack(blocks)


def compatibility_rank(
    points: "np.ndarray | Sequence", cells: Sequence[Sequence[int]]
) -> tuple[int, int]:
    """
    Numerical rank of the compatibility map and the rank of its target.

    Returns:
        (observed rank, sum over I of C(n + |I| - 1, n))
    """
    pts = _as_points(points)
    n = pts.shape[1]
    matrix = kergin_compatibility_matrix(pts, cells)
    sv = np.linalg.svd(matrix, compute_uv=False)
    tol = max(matrix.shape) * np.finfo(float).eps * (sv[0] if sv.size else 0.0)
    expected = sum(basis_size(n, len(cell) - 1) for cell in cells)
    return int(np.sum(sv > tol)), expected
