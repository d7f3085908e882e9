"""
Quadrature on the standard k-simplex.

Points of the simplex are handled in barycentric coordinates
(t0, t1, ..., tk), t0 = 1 - t1 - ... - tk, and the measure is Lebesgue
measure in (t1, ..., tk), so the simplex has mass 1/k!.

Rules are Grundmann-Moller rules: the rule of index s integrates every
polynomial of total degree <= 2s+1 exactly. They have signed weights, and
their node sets are invariant under permutation of the barycentric
coordinates.
"""

import heapq
import math
import warnings
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from ..exceptions import ResolutionWarning, ValidationError
from ..logging import get_logger
from ..utils.cache import memoized, shared_cache
from .polycore import homogeneous_exponents

logger = get_logger(__name__)


@dataclass(frozen=True, eq=False)
class SimplexRule:
    """Cubature rule on the standard k-simplex."""

    k: int
    nodes: np.ndarray  # (m, k+1) barycentric coordinates
    weights: np.ndarray  # (m,), summing to 1/k!
    exactness_degree: int

    def integrate(self, fn: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        """Integrate fn, which maps an (m, k+1) barycentric batch to (m, ...) values."""
        values = np.asarray(fn(self.nodes), dtype=float)
        return np.tensordot(self.weights, values, axes=([0], [0]))

    @property
    def size(self) -> int:
        return self.weights.size


@memoized(shared_cache)
def grundmann_moller(k: int, s: int) -> SimplexRule:
    """
    Grundmann-Moller rule of index s on the k-simplex (exact to degree 2s+1).

    Args:
        k: Simplex dimension (k >= 0)
        s: Rule index (s >= 0)
    """
    if k < 0 or s < 0:
        raise ValidationError(f"Need k >= 0 and s >= 0, got k={k}, s={s}")
    degree = 2 * s + 1
    if k == 0:
        return SimplexRule(0, np.ones((1, 1)), np.ones(1), degree)

    nodes: list[np.ndarray] = []
    weights: list[float] = []
    for i in range(s + 1):
        denom = degree + k - 2 * i
        weight = (
            (-1) ** i
            * 2.0 ** (-2 * s)
            * denom**degree
            / math.factorial(i)
            / math.factorial(degree + k - i)
        )
        betas = homogeneous_exponents(k + 1, s - i)
        nodes.append((2.0 * betas + 1.0) / denom)
        weights.extend([weight] * len(betas))
    return SimplexRule(k, np.vstack(nodes), np.array(weights), degree)


def rule_for_degree(k: int, degree: int) -> SimplexRule:
    """Cheapest Grundmann-Moller rule exact for polynomials of the given degree."""
    s = max(0, math.ceil((degree - 1) / 2))
    return grundmann_moller(k, s)


def dirichlet_moment(exponents: Sequence[int]) -> float:
    """
    Exact integral of prod_j t_j^{a_j} over the standard k-simplex.

    Args:
        exponents: a_0, ..., a_k over the k+1 barycentric coordinates

    Returns:
        prod Gamma(a_j + 1) / Gamma(k + 1 + sum a)
    """
    a = np.asarray(exponents, dtype=float)
    k = a.size - 1
    return float(np.exp(gammaln(a + 1).sum() - gammaln(k + 1 + a.sum())))


@dataclass(frozen=True)
class AdaptiveResult:
    """Outcome of adaptive simplex integration."""

    value: np.ndarray
    error_estimate: float
    pieces: int
    converged: bool


def _rule_on(rule: SimplexRule, vertices: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Map a rule onto the sub-simplex with barycentric vertex rows ``vertices``."""
    return rule.nodes @ vertices, rule.weights * abs(np.linalg.det(vertices))


def adaptive_integrate(
    fn: Callable[[np.ndarray], np.ndarray],
    k: int,
    tol: float = 1e-9,
    max_depth: int = 24,
    s: int = 3,
    max_pieces: int = 20000,
) -> AdaptiveResult:
    """
    Integrate a smooth fn over the k-simplex to absolute tolerance tol.

    Each piece is integrated with the rules of index s and s+1; pieces where
    they disagree by more than their share of tol are bisected along their
    longest edge.

    Args:
        fn: Maps an (m, k+1) barycentric batch to (m, ...) values
        k: Simplex dimension
        tol: Absolute tolerance on the max-norm of the integral
        max_depth: Maximum bisection depth
        s: Index of the lower rule
        max_pieces: Hard cap on the number of pieces

    Returns:
        AdaptiveResult with the integral and an error estimate
    """
    if k == 0:
        value = np.asarray(fn(np.ones((1, 1))), dtype=float)[0]
        return AdaptiveResult(value, 0.0, 1, True)

    low, high = grundmann_moller(k, s), grundmann_moller(k, s + 1)

    def estimate(vertices: np.ndarray) -> tuple[np.ndarray, float, float]:
        nodes_h, weights_h = _rule_on(high, vertices)
        nodes_l, weights_l = _rule_on(low, vertices)
        value_h = np.tensordot(weights_h, np.asarray(fn(nodes_h), float), axes=([0], [0]))
        value_l = np.tensordot(weights_l, np.asarray(fn(nodes_l), float), axes=([0], [0]))
        err = float(np.max(np.abs(value_h - value_l), initial=0.0))
        return value_h, err, abs(np.linalg.det(vertices))

    root = np.eye(k + 1)
    value, err, frac = estimate(root)
    # max-heap on excess error; entries (-(err - budget), counter, depth, vertices, value, err)
    heap = [(-(err - tol * frac), 0, 0, root, value, err)]
    counter = 1
    converged = True
    while heap and len(heap) < max_pieces:
        excess = -heap[0][0]
        if excess <= 0:
            break
        _, _, depth, vertices, p_value, p_err = heapq.heappop(heap)
        if depth >= max_depth:
            heapq.heappush(heap, (0.0, counter, depth, vertices, p_value, p_err))
            counter += 1
            converged = False
            continue
        i, j = max(
            ((a, b) for a in range(k + 1) for b in range(a + 1, k + 1)),
            key=lambda ab: np.linalg.norm(vertices[ab[0]] - vertices[ab[1]]),
        )
        mid = 0.5 * (vertices[i] + vertices[j])
        for replaced in (i, j):
            child = vertices.copy()
            child[replaced] = mid
            c_value, c_err, c_frac = estimate(child)
            heapq.heappush(
                heap, (-(c_err - tol * c_frac), counter, depth + 1, child, c_value, c_err)
            )
            counter += 1
    if heap and len(heap) >= max_pieces:
        converged = False

    total = np.sum([entry[4] for entry in heap], axis=0)
    error = math.fsum(entry[5] for entry in heap)
    if not converged:
        logger.warning(
            "Adaptive simplex quadrature stopped before reaching tolerance",
            k=k,
            tol=tol,
            error_estimate=error,
            pieces=len(heap),
        )
        warnings.warn(
            ResolutionWarning(
                f"Simplex quadrature stopped at error {error:.3e} > tol {tol:.3e}; "
                "raise quadrature_max_depth"
            ),
            stacklevel=2,
        )
    return AdaptiveResult(np.asarray(total), error, len(heap), converged)
