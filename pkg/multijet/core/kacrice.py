"""
Kac-Rice densities and factorial moments of zero sets.

For a centred Gaussian field f: R^n -> R^r with p-non-degenerate jets,

    rho_p(x1, ..., xp) = E[prod_i Jac(D_{x_i} f) | f(x_i) = 0 for all i]
                         / det(2 pi Var(f(x1), ..., f(xp)))^{1/2}

with Jac L = det(L L^T)^{1/2}. Conditional expectations come from the
Schur complement of the first-jet covariance and are estimated by Monte
Carlo with common random numbers; textbook closed forms are used for rho_1
when the derivative covariance is isotropic. Every estimator normalises the
kernel to unit variance first, so c*f and f give identical results.
"""

import math
import warnings
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.linalg import LinAlgError, cho_factor, cho_solve, cholesky, eigvalsh, null_space, qr
from scipy.special import gammaln

from ..config import Config
from ..context import get_chunk_size
from ..exceptions import (
    CapExceededError,
    DegenerateConditioningError,
    DimensionMismatchError,
    IntegrabilityWarning,
    ValidationError,
)
from ..logging import get_logger, log_estimate
from ..types import Box
from ..utils.parallel import fsum_columns, map_chunks
from ..utils.seeding import stream
from ..utils.stats import mean_and_se, weighted_intercept, weighted_slope
from .configspace import Configuration, Partition, Subspace, all_partitions
from .gaussfield import CovKernel, JetCov, gaussian_factor, jet_covariance

logger = get_logger(__name__)

DEFAULT_MC_SAMPLES = 100_000
MAX_CONDITION = 1e12
STABLE_CONDITION = 1e8
COLLAR_FACTOR = 10.0
SPD_TOL = 1e-10
REJECTION_DELTA = 0.01
REJECTION_DELTAS = (0.02, 0.01, 0.005)


def jacobian_batch(L: np.ndarray) -> np.ndarray:
    """Jac of a stack of r x n matrices, shape (m, r, n) -> (m,)."""
    L = np.asarray(L, dtype=float)
    r, n = L.shape[-2:]
    if r > n:
        raise ValidationError(f"Jacobian needs r <= n, got a {r}x{n} matrix", field="L")
    if r == 1:
        return np.linalg.norm(L[..., 0, :], axis=-1)
    if r == n:
        return np.abs(np.linalg.det(L))
    gram = L @ np.swapaxes(L, -1, -2)
    return np.sqrt(np.clip(np.linalg.det(gram), 0.0, None))


def jacobian(L: np.ndarray) -> float:
    """Jac L = det(L L^T)^{1/2}, positive exactly when L is surjective."""
    L = np.atleast_2d(np.asarray(L, dtype=float))
    return float(jacobian_batch(L[None])[0])


def _check_spd(g: np.ndarray) -> np.ndarray:
    g = np.atleast_2d(np.asarray(g, dtype=float))
    if g.shape[0] != g.shape[1]:
        raise ValidationError(f"Metric must be square, got shape {g.shape}", field="g")
    if np.max(np.abs(g - g.T)) > SPD_TOL * max(np.max(np.abs(g)), 1.0):
        raise ValidationError("Metric is not symmetric", field="g")
    try:
        cholesky(g, lower=True)
    except LinAlgError:
        raise ValidationError("Metric is not positive definite", field="g") from None
    return g


def gamma(g: np.ndarray) -> float:
    """det(g)^{1/2}, the Riemannian volume density."""
    return math.sqrt(np.linalg.det(_check_spd(g)))


def gamma_r(g: np.ndarray, G: "Subspace | np.ndarray") -> float:
    """
    det(g restricted to G)^{1/2}.

    Args:
        g: SPD matrix
        G: Subspace of R^n, or an n x k matrix whose columns span it
    """
    g = _check_spd(g)
    basis = G.basis if isinstance(G, Subspace) else np.asarray(G, dtype=float)
    basis = basis.reshape(g.shape[0], -1)
    if basis.shape[1] == 0:
        return 1.0
    Q, _ = qr(basis, mode="economic")
    return math.sqrt(max(np.linalg.det(Q.T @ g @ Q), 0.0))


def jacobian_g(L: np.ndarray, g: np.ndarray) -> float:
    """Jacobian of L measured with the metric g on the source: det(L g^-1 L^T)^{1/2}."""
    g = _check_spd(g)
    L = np.atleast_2d(np.asarray(L, dtype=float))
    if L.shape[1] != g.shape[0]:
        raise DimensionMismatchError(g.shape[0], L.shape[1], field="L")
    if L.shape[0] > L.shape[1]:
        raise ValidationError("Jacobian needs r <= n", field="L")
    return math.sqrt(max(np.linalg.det(L @ np.linalg.solve(g, L.T)), 0.0))


def jacobian_identity_gap(L: np.ndarray, g: np.ndarray) -> float:
    """|gamma_r(ker L) Jac(L) - gamma(g) Jac_g(L)|, zero up to rounding."""
    L = np.atleast_2d(np.asarray(L, dtype=float))
    lhs = gamma_r(g, null_space(L)) * jacobian(L)
    rhs = gamma(g) * jacobian_g(L, g)
    return abs(lhs - rhs)


@dataclass(frozen=True, eq=False)
class MetricField:
    """A Riemannian metric x -> g(x) on R^n."""

    g: Callable[[np.ndarray], np.ndarray]
    n: int

    def at(self, x: np.ndarray) -> np.ndarray:
        value = _check_spd(self.g(np.asarray(x, dtype=float)))
        if value.shape[0] != self.n:
            raise DimensionMismatchError(self.n, value.shape[0], field="g")
        return value

    @classmethod
    def constant(cls, matrix: np.ndarray) -> "MetricField":
        matrix = _check_spd(matrix)
        return cls(g=lambda x: matrix, n=matrix.shape[0])


@dataclass(frozen=True, eq=False)
class CondGaussian:
    """Centred Gaussian law of the derivative block given value block = 0."""

    covariance: np.ndarray
    value_cov: np.ndarray
    value_rows: list[int]
    derivative_rows: list[int]

    @property
    def zero_density(self) -> float:
        """Density of the value block at 0, det(2 pi Var)^{-1/2}."""
        sign, logdet = np.linalg.slogdet(2 * np.pi * self.value_cov)
        return math.exp(-0.5 * logdet) if sign > 0 else math.inf


def conditional_gaussian(
    jc: "JetCov | np.ndarray",
    value_rows: Sequence[int],
    derivative_rows: Sequence[int] | None = None,
    max_condition: float = MAX_CONDITION,
) -> CondGaussian:
    """
    Condition a Gaussian vector on a block of its coordinates being zero.

    Args:
        jc: Joint covariance (JetCov or plain matrix)
        value_rows: Indices of the conditioning block
        derivative_rows: Indices of the conditioned block (the rest if None)
        max_condition: Largest accepted condition number of the value block

    Raises:
        DegenerateConditioningError: If the value block is (nearly) singular
    """
    matrix = jc.matrix if isinstance(jc, JetCov) else np.asarray(jc, dtype=float)
    v = list(value_rows)
    d = (
        [i for i in range(matrix.shape[0]) if i not in set(v)]
        if derivative_rows is None
        else list(derivative_rows)
    )
    vv = matrix[np.ix_(v, v)]
    eig = eigvalsh(vv)
    if eig[0] <= 0 or eig[-1] > max_condition * eig[0]:
        raise DegenerateConditioningError(
            float(eig[0]), condition=float(eig[-1] / eig[0]) if eig[0] > 0 else math.inf
        )
    factor = cho_factor(vv, lower=True)
    dv = matrix[np.ix_(d, v)]
    cov = matrix[np.ix_(d, d)] - dv @ cho_solve(factor, dv.T)
    return CondGaussian(0.5 * (cov + cov.T), vv, v, d)


@dataclass(frozen=True)
class DensityEstimate:
    """A density value with its Monte Carlo standard error (0 for closed forms)."""

    value: float
    std_error: float
    samples: int
    method: Literal["closed_form", "monte_carlo"]


def _resolve_samples(samples: int | None, config: Config | None, override_caps: bool) -> int:
    samples = samples or (config.mc_samples if config else DEFAULT_MC_SAMPLES)
    cap = config.max_mc_samples if config else None
    if cap is not None and samples > cap and not override_caps:
        raise CapExceededError("max_mc_samples", samples, cap)
    return samples


def _chi_mean(k: int) -> float:
    """E of a chi variable with k degrees of freedom."""
    return math.sqrt(2.0) * math.exp(gammaln((k + 1) / 2) - gammaln(k / 2))


def _closed_form_jacobian_mean(cov: np.ndarray, r: int, n: int) -> float | None:
    """E[Jac L] for L with isotropic iid N(0, sigma^2) entries, None otherwise."""
    sigma2 = float(np.mean(np.diag(cov)))
    if sigma2 <= 0 or np.max(np.abs(cov - sigma2 * np.eye(cov.shape[0]))) > 1e-12 * sigma2:
        return None
    sigma = math.sqrt(sigma2)
    if r == 1:
        return sigma * _chi_mean(n)
    if r == n:
        return sigma**n * math.prod(_chi_mean(k) for k in range(1, n + 1))
    return None


def _mc_jacobian_product(
    cov: np.ndarray,
    shape: tuple[int, int, int],
    samples: int,
    seed: int,
    label: str,
    config: Config | None,
    threads: int | None,
    metric: np.ndarray | None = None,
) -> tuple[float, float]:
    """Mean and SE of prod over sites of Jac for derivative blocks ~ N(0, cov)."""
    factor = gaussian_factor(cov, config.psd_jitter if config else 1e-12)
    p, r, n = shape
    chunk = config.chunk_size if config else get_chunk_size()
    if metric is not None:
        g_inv_half = np.linalg.cholesky(np.linalg.inv(metric))

    def run(idx: int, start: int, stop: int) -> list[float]:
        count = stop - start
        z = stream(seed, label, idx).standard_normal((count, factor.shape[1]))
        blocks = (z @ factor.T).reshape(count * p, r, n)
        if metric is not None:
            blocks = blocks @ g_inv_half
        values = jacobian_batch(blocks).reshape(count, p).prod(axis=1)
        return [math.fsum(values), math.fsum(values * values)]

    total, total_sq = fsum_columns(map_chunks(run, samples, chunk, threads))
    return mean_and_se(total, total_sq, samples)


def rho1(
    kernel: CovKernel,
    r: int = 1,
    x: np.ndarray | None = None,
    mc_samples: int | None = None,
    seed: int = 0,
    metric: MetricField | None = None,
    config: Config | None = None,
    override_caps: bool = False,
    threads: int | None = None,
) -> DensityEstimate:
    """
    Kac-Rice density of E[nu] at x for an r-component field with the given kernel.

    With a metric the density is taken against the Riemannian volume and
    the Jacobian is measured in g.

    Raises:
        DegenerateConditioningError: If Var f(x) is singular
    """
    n = kernel.n
    if not 1 <= r <= n:
        raise ValidationError(f"Need 1 <= r <= n, got r={r}, n={n}", field="r")
    x = np.zeros(n) if x is None else np.asarray(x, dtype=float).reshape(n)
    unit = kernel.normalized()
    jc = jet_covariance(unit, x[None, :], 1, components=r)
    cg = conditional_gaussian(jc, jc.rows(order=0), jc.rows(order=1))
    g = metric.at(x) if metric is not None else None

    mean = _closed_form_jacobian_mean(cg.covariance, r, n) if g is None or r == n else None
    if mean is not None:
        value = mean * cg.zero_density
        if g is not None:
            value /= math.sqrt(np.linalg.det(g))
        estimate = DensityEstimate(value, 0.0, 0, "closed_form")
    else:
        samples = _resolve_samples(mc_samples, config, override_caps)
        mean, se = _mc_jacobian_product(
            cg.covariance, (1, r, n), samples, seed, "rho", config, threads, metric=g
        )
        estimate = DensityEstimate(
            mean * cg.zero_density, se * cg.zero_density, samples, "monte_carlo"
        )
    log_estimate(logger, "rho1", estimate.value, estimate.std_error, estimate.samples, kernel=kernel.name)
    return estimate


def _canonical_sites(points: "Configuration | np.ndarray", n: int) -> np.ndarray:
    pts = points.points if isinstance(points, Configuration) else np.asarray(points, dtype=float)
    pts = np.atleast_2d(pts)
    if pts.shape[1] != n:
        raise DimensionMismatchError(n, pts.shape[1], field="points")
    return pts[np.lexsort(pts.T[::-1])]


def rho_p(
    kernel: CovKernel,
    points: "Configuration | np.ndarray",
    r: int = 1,
    mc_samples: int | None = None,
    seed: int = 0,
    config: Config | None = None,
    override_caps: bool = False,
    threads: int | None = None,
) -> DensityEstimate:
    """
    Kac-Rice density of the p-th factorial moment at an off-diagonal configuration.

    Sites are put in a canonical order and every call draws from the same
    stream, so permuted configurations give identical estimates and sweeps
    over configurations share their random numbers.

    Raises:
        DegenerateConditioningError: Near the diagonal, where Var of the values is singular
    """
    n = kernel.n
    if not 1 <= r <= n:
        raise ValidationError(f"Need 1 <= r <= n, got r={r}, n={n}", field="r")
    sites = _canonical_sites(points, n)
    samples = _resolve_samples(mc_samples, config, override_caps)
    jc = jet_covariance(kernel.normalized(), sites, 1, components=r)
    cg = conditional_gaussian(jc, jc.rows(order=0), jc.rows(order=1))
    mean, se = _mc_jacobian_product(
        cg.covariance, (sites.shape[0], r, n), samples, seed, "rho", config, threads
    )
    estimate = DensityEstimate(
        mean * cg.zero_density, se * cg.zero_density, samples, "monte_carlo"
    )
    log_estimate(
        logger, "rho_p", estimate.value, estimate.std_error, samples, p=sites.shape[0]
    )
    return estimate


@dataclass(frozen=True, eq=False)
class RejectionMoments:
    """Second moments of the derivative block over draws whose values land in a window."""

    second_moment: np.ndarray
    std_error: np.ndarray
    trace: float
    trace_se: float
    accepted: int
    draws: int
    delta: float


def rejection_moments(
    jc: "JetCov | np.ndarray",
    value_rows: Sequence[int],
    delta: float,
    draws: int,
    seed: int = 0,
    derivative_rows: Sequence[int] | None = None,
    config: Config | None = None,
    threads: int | None = None,
) -> RejectionMoments:
    """
    E[d d^T | max_i |v_i| < delta] from unconditioned draws of the whole vector.

    No Schur complement is involved: the full Gaussian is sampled and draws
    outside the window are discarded. The window biases the moments by
    O(delta^2).

    Raises:
        ValidationError: If fewer than two draws land in the window
    """
    matrix = jc.matrix if isinstance(jc, JetCov) else np.asarray(jc, dtype=float)
    if delta <= 0:
        raise ValidationError(f"Window half-width must be positive, got {delta}", field="delta")
    v = list(value_rows)
    d = (
        [i for i in range(matrix.shape[0]) if i not in set(v)]
        if derivative_rows is None
        else list(derivative_rows)
    )
    factor = gaussian_factor(matrix, config.psd_jitter if config else 1e-12)
    chunk = config.chunk_size if config else get_chunk_size()
    k = len(d)

    def run(idx: int, start: int, stop: int) -> list[float]:
        z = stream(seed, "rejection", idx).standard_normal((stop - start, factor.shape[1]))
        x = z @ factor.T
        kept = x[np.all(np.abs(x[:, v]) < delta, axis=1)][:, d]
        outer = (kept[:, :, None] * kept[:, None, :]).reshape(-1, k * k)
        norms = np.einsum("ij,ij->i", kept, kept)
        return [
            float(kept.shape[0]),
            *outer.sum(axis=0),
            *(outer * outer).sum(axis=0),
            math.fsum(norms),
            math.fsum(norms * norms),
        ]

    sums = fsum_columns(map_chunks(run, draws, chunk, threads))
    accepted = int(sums[0])
    if accepted < 2:
        raise ValidationError(
            f"Only {accepted} of {draws} draws landed in the window; increase draws",
            field="draws",
        )
    moments = [
        mean_and_se(sums[1 + i], sums[1 + k * k + i], accepted) for i in range(k * k)
    ]
    trace, trace_se = mean_and_se(sums[-2], sums[-1], accepted)
    logger.debug("Rejection moments", delta=delta, draws=draws, accepted=accepted)
    return RejectionMoments(
        second_moment=np.array([m for m, _ in moments]).reshape(k, k),
        std_error=np.array([s for _, s in moments]).reshape(k, k),
        trace=trace,
        trace_se=trace_se,
        accepted=accepted,
        draws=draws,
        delta=delta,
    )


def conditioning_gap(
    jc: "JetCov | np.ndarray",
    value_rows: Sequence[int],
    delta: float = REJECTION_DELTA,
    draws: int = DEFAULT_MC_SAMPLES,
    seed: int = 0,
    config: Config | None = None,
    threads: int | None = None,
) -> float:
    """
    Standardised gap between the Schur-complement and rejection conditional traces.

    Returns:
        (rejection trace - trace of the conditional covariance) / rejection SE
    """
    cg = conditional_gaussian(jc, value_rows)
    windowed = rejection_moments(
        jc, value_rows, delta, draws, seed, derivative_rows=cg.derivative_rows, config=config, threads=threads
    )
    return (windowed.trace - float(np.trace(cg.covariance))) / max(windowed.trace_se, 1e-300)


@dataclass(frozen=True)
class WindowEstimate:
    """rho_2 with a finite conditioning window."""

    delta: float
    value: float
    std_error: float
    accepted: int


@dataclass(frozen=True)
class RejectionDensity:
    """rho_2 extrapolated to a zero-width window, with the per-window estimates."""

    value: float
    std_error: float
    draws: int
    windows: list[WindowEstimate] = field(default_factory=list)


def rejection_rho2(
    kernel: CovKernel,
    points: "Configuration | np.ndarray",
    deltas: Sequence[float] = REJECTION_DELTAS,
    draws: int | None = None,
    seed: int = 0,
    config: Config | None = None,
    override_caps: bool = False,
    threads: int | None = None,
) -> RejectionDensity:
    """
    rho_2 of a scalar field from windowed draws, without conditioning.

    For each delta, E[|grad f(x)| |grad f(y)| 1{|f(x)|, |f(y)| < delta}] / (2 delta)^2
    is estimated from independent draws of the first jets at both sites.
    The estimates are fitted as a + b delta^2 and the intercept a is the
    zero-window value.

    Args:
        kernel: Covariance kernel of the scalar field
        points: The two sites
        deltas: Window half-widths, at least two
        draws: Draws per window (capped like Monte Carlo samples)

    Raises:
        ValidationError: Unless there are exactly two sites and two windows,
            or if a window catches fewer than two draws
    """
    n = kernel.n
    sites = _canonical_sites(points, n)
    if sites.shape[0] != 2:
        raise ValidationError(f"Need exactly two sites, got {sites.shape[0]}", field="points")
    deltas = sorted({float(x) for x in deltas}, reverse=True)
    if len(deltas) < 2 or deltas[-1] <= 0:
        raise ValidationError("Need at least two positive window half-widths", field="deltas")
    draws = _resolve_samples(draws, config, override_caps)
    jc = jet_covariance(kernel.normalized(), sites, 1)
    v, d = jc.rows(order=0), jc.rows(order=1)
    factor = gaussian_factor(jc.matrix, config.psd_jitter if config else 1e-12)
    chunk = config.chunk_size if config else get_chunk_size()

    windows = []
    for j, delta in enumerate(deltas):

        def run(idx: int, start: int, stop: int, j: int = j, delta: float = delta) -> list[float]:
            count = stop - start
            z = stream(seed, "rejection_rho", j, idx).standard_normal((count, factor.shape[1]))
            x = z @ factor.T
            inside = np.all(np.abs(x[:, v]) < delta, axis=1)
            grads = np.linalg.norm(x[:, d].reshape(count, 2, n), axis=2).prod(axis=1)
            values = np.where(inside, grads, 0.0) / (2 * delta) ** 2
            return [float(inside.sum()), math.fsum(values), math.fsum(values * values)]

        accepted, total, total_sq = fsum_columns(map_chunks(run, draws, chunk, threads))
        if accepted < 2:
            raise ValidationError(
                f"Only {int(accepted)} of {draws} draws landed in the window {delta}; increase draws",
                field="draws",
            )
        mean, se = mean_and_se(total, total_sq, draws)
        windows.append(WindowEstimate(delta, mean, se, int(accepted)))

    value, se = weighted_intercept(
        [w.delta**2 for w in windows], [w.value for w in windows], [w.std_error for w in windows]
    )
    log_estimate(logger, "rejection_rho2", value, se, draws, windows=len(windows))
    return RejectionDensity(value, se, draws, windows)


def _unit_direction(u: Sequence[float] | None, n: int) -> np.ndarray:
    u = np.eye(n)[0] if u is None else np.asarray(u, dtype=float).reshape(n)
    norm = np.linalg.norm(u)
    if norm == 0:
        raise ValidationError("Direction must be non-zero", field="u")
    return u / norm


def conditioning_floor(
    kernel: CovKernel, u: Sequence[float] | None = None, max_condition: float = STABLE_CONDITION
) -> float:
    """
    Smallest eps on a quarter-decade grid for which Var(f(0), f(eps u)) stays conditioned.

    Below this floor the Schur complement used by rho_2 loses its
    significant digits.
    """
    u = _unit_direction(u, kernel.n)
    unit = kernel.normalized()
    zero = [(0,) * kernel.n]
    floor = None
    for j in range(4, 41):
        eps = 10.0 ** (-j / 4)
        jc = jet_covariance(unit, np.vstack([np.zeros(kernel.n), eps * u]), 0, alphas=zero)
        eig = eigvalsh(jc.matrix)
        if eig[0] <= 0 or eig[-1] > max_condition * eig[0]:
            break
        floor = eps
    if floor is None:
        raise DegenerateConditioningError(0.0, reason="no stable separation above 1e-1")
    return floor


@dataclass(frozen=True)
class ScalingRow:
    eps: float
    value: float
    std_error: float
    stable: bool


@dataclass(frozen=True)
class ScalingProbe:
    """Log-log fit of eps -> rho_2(0, eps u)."""

    slope: float
    slope_se: float
    intercept: float
    floor: float
    rows: list[ScalingRow] = field(default_factory=list)


def diagonal_scaling_probe(
    kernel: CovKernel,
    eps_grid: Sequence[float],
    u: Sequence[float] | None = None,
    mc_samples: int | None = None,
    seed: int = 0,
    config: Config | None = None,
    override_caps: bool = False,
    threads: int | None = None,
) -> ScalingProbe:
    """
    Fit the exponent s in rho_2(0, eps u) ~ A eps^s for a scalar field.

    Points below the conditioning floor (or failing to condition) are
    reported as unstable and left out of the fit.

    Raises:
        ValidationError: If fewer than two grid points are stable
    """
    u = _unit_direction(u, kernel.n)
    floor = conditioning_floor(kernel, u)
    rows = []
    for eps in eps_grid:
        if eps < floor:
            rows.append(ScalingRow(float(eps), math.nan, math.nan, False))
            continue
        try:
            est = rho_p(
                kernel,
                np.vstack([np.zeros(kernel.n), eps * u]),
                1,
                mc_samples,
                seed,
                config,
                override_caps,
                threads,
            )
        except DegenerateConditioningError as e:
            logger.warning("Skipping unstable separation", eps=eps, error=e.message)
            rows.append(ScalingRow(float(eps), math.nan, math.nan, False))
            continue
        rows.append(ScalingRow(float(eps), est.value, est.std_error, est.value > 0))
    good = [row for row in rows if row.stable]
    if len(good) < 2:
        raise ValidationError(
            f"Only {len(good)} stable separations above the floor {floor:.3g}",
            field="eps_grid",
        )
    slope, slope_se, intercept = weighted_slope(
        [math.log(row.eps) for row in good],
        [math.log(row.value) for row in good],
        [row.std_error / row.value for row in good],
    )
    logger.info("Fitted diagonal scaling", slope=slope, slope_se=slope_se, floor=floor)
    return ScalingProbe(slope, slope_se, intercept, floor, rows)


@dataclass(frozen=True)
class FactorialIntegral:
    """Integral of rho_k over box^k with its error budget."""

    k: int
    value: float
    std_error: float
    collar: float = 0.0
    collar_width: float = 0.0
    collar_slope: float | None = None
    nodes: int = 0


def _collar_fit(
    kernel: CovKernel, width: float, r: int, rho_kwargs: dict
) -> tuple[float, float]:
    """Power law A h^s fitted to rho_2(0, h e1) just above the collar width."""
    e1 = np.eye(kernel.n)[0]
    eps = [width * 2.0**j for j in range(4)]
    ests = [rho_p(kernel, np.vstack([np.zeros(kernel.n), h * e1]), r, **rho_kwargs) for h in eps]
    slope, _, intercept = weighted_slope(
        [math.log(h) for h in eps],
        [math.log(e.value) for e in ests],
        [e.std_error / e.value for e in ests],
    )
    return math.exp(intercept), slope


def _warn_non_integrable(slope: float, n: int) -> None:
    warnings.warn(
        IntegrabilityWarning(
            f"rho_2 scales like h^{slope:.3f} near the diagonal, not integrable in dimension {n}"
        ),
        stacklevel=3,
    )


def _pair_integral_1d(kernel, L, width, r, nodes, rho_kwargs) -> tuple[float, float]:
    t, w = leggauss(nodes)
    h = width + (L - width) * (t + 1) / 2
    w = w * (L - width) / 2
    value, se = [], []
    for hi, wi in zip(h, w):
        est = rho_p(kernel, np.array([[0.0], [hi]]), r, **rho_kwargs)
        value.append(2 * wi * (L - hi) * est.value)
        se.append(2 * wi * (L - hi) * est.std_error)
    return math.fsum(value), math.fsum(se)


def _pair_integral_2d(kernel, lengths, width, r, nodes, rho_kwargs) -> tuple[float, float]:
    """Polar integration of rho_2(0, h) (L1 - |h1|)(L2 - |h2|) over |h| > width."""
    L1, L2 = lengths
    corner = math.atan2(L2, L1)
    angular = max(4, nodes // 2)
    t_theta, w_theta = leggauss(angular)
    t_rad, w_rad = leggauss(nodes)
    value, se = [], []
    for lo, hi in [(0.0, corner), (corner, math.pi - corner), (math.pi - corner, math.pi)]:
        for tt, wt in zip(t_theta, w_theta):
            theta = lo + (hi - lo) * (tt + 1) / 2
            wt = wt * (hi - lo) / 2
            c, s = abs(math.cos(theta)), abs(math.sin(theta))
            reach = min(L1 / c if c > 0 else math.inf, L2 / s if s > 0 else math.inf)
            if reach <= width:
                continue
            u = np.array([math.cos(theta), math.sin(theta)])
            for tr, wr in zip(t_rad, w_rad):
                rad = width + (reach - width) * (tr + 1) / 2
                weight = 2 * wt * wr * (reach - width) / 2 * rad * (L1 - rad * c) * (L2 - rad * s)
                est = rho_p(kernel, np.vstack([np.zeros(2), rad * u]), r, **rho_kwargs)
                value.append(weight * est.value)
                se.append(abs(weight) * est.std_error)
    return math.fsum(value), math.fsum(se)


def _triple_integral_1d(kernel, L, width, r, nodes, rho_kwargs) -> tuple[float, float]:
    """6 * integral over 0 < h1, h2 with h1 + h2 < L of (L - h1 - h2) rho_3(0, h1, h1 + h2)."""
    t, w = leggauss(nodes)
    value, se = [], []
    top = L - width
    for t1, w1 in zip(t, w):
        h1 = width + (top - width) * (t1 + 1) / 2
        w1 = w1 * (top - width) / 2
        reach = L - h1
        if reach <= width:
            continue
        for t2, w2 in zip(t, w):
            h2 = width + (reach - width) * (t2 + 1) / 2
            weight = 6 * w1 * w2 * (reach - width) / 2 * (L - h1 - h2)
            est = rho_p(kernel, np.array([[0.0], [h1], [h1 + h2]]), r, **rho_kwargs)
            value.append(weight * est.value)
            se.append(abs(weight) * est.std_error)
    return math.fsum(value), math.fsum(se)


def factorial_moment_integral(
    kernel: CovKernel,
    box: Box,
    k: int,
    r: int = 1,
    mc_samples: int | None = None,
    seed: int = 0,
    config: Config | None = None,
    override_caps: bool = False,
    threads: int | None = None,
    nodes: int = 16,
) -> FactorialIntegral:
    """
    Integral of rho_k over box^k for a stationary field.

    k=1 is rho_1 times the volume. For k=2 the integral is reduced to the
    difference variable and computed by Gauss-Legendre quadrature outside a
    diagonal collar of width 10x the conditioning floor; the collar is
    closed with the power law fitted just outside it. k=3 is available for
    n=1, where rho_3 vanishes on the diagonal and the collar is dropped.
    The reported SE adds the per-node errors linearly since the nodes share
    random numbers.

    Warns:
        IntegrabilityWarning: If the fitted collar exponent is <= -n
    """
    n = kernel.n
    if box.n != n:
        raise DimensionMismatchError(n, box.n, field="box")
    if r not in (1, n):
        raise ValidationError("Factorial integrals need r=1 or r=n", field="r")
    rho_kwargs = dict(
        mc_samples=_resolve_samples(mc_samples, config, override_caps),
        seed=seed,
        config=config,
        override_caps=override_caps,
        threads=threads,
    )
    if k == 1:
        est = rho1(kernel, r, **rho_kwargs)
        return FactorialIntegral(1, est.value * box.volume, est.std_error * box.volume)
    if k not in (2, 3) or n > 2 or (k == 3 and n != 1):
        raise ValidationError(
            f"Factorial integrals are available for k=1, k=2 (n<=2) and k=3 (n=1); got k={k}, n={n}",
            field="k",
        )

    width = COLLAR_FACTOR * conditioning_floor(kernel)
    if width >= min(box.lengths) / 4:
        raise ValidationError("Box is too small compared with the diagonal collar", field="box")
    if k == 3:
        value, se = _triple_integral_1d(kernel, box.lengths[0], width, r, nodes, rho_kwargs)
        return FactorialIntegral(3, value, se, 0.0, width, None, nodes)

    amplitude, slope = _collar_fit(kernel, width, r, rho_kwargs)
    if n == 1:
        L = box.lengths[0]
        value, se = _pair_integral_1d(kernel, L, width, r, nodes, rho_kwargs)
        if slope <= -1:
            _warn_non_integrable(slope, n)
            collar = math.inf
        else:
            collar = 2 * amplitude * (
                L * width ** (slope + 1) / (slope + 1) - width ** (slope + 2) / (slope + 2)
            )
    else:
        value, se = _pair_integral_2d(kernel, box.lengths, width, r, nodes, rho_kwargs)
        if slope <= -2:
            _warn_non_integrable(slope, n)
            collar = math.inf
        else:
            # isotropic leading term; the weight (L1-|h1|)(L2-|h2|) is L1 L2 at h=0
            collar = 2 * math.pi * box.volume * amplitude * width ** (slope + 2) / (slope + 2)
    result = FactorialIntegral(2, value + collar, se, collar, width, slope, nodes)
    log_estimate(logger, "factorial_integral", result.value, result.std_error, rho_kwargs["mc_samples"], k=2, collar=collar)
    return result


def stirling2(p: int, k: int) -> int:
    """Number of partitions of a p-set into k blocks."""
    if p == k:
        return 1
    if k == 0 or k > p:
        return 0
    return k * stirling2(p - 1, k) + stirling2(p - 1, k - 1)


def factorials_by_order(values: Mapping[int, float], p: int) -> dict[Partition, float]:
    """Spread factorial moments given by order k over the partitions with k cells."""
    return {
        partition: values[len(partition)]
        for partition in all_partitions(p)
        if len(partition) in values
    }


def moment_from_factorials(
    factorials: Mapping[Partition, float], p: int, r: int, n: int
) -> float:
    """
    E[<nu, 1_B>^p] from the factorial moments attached to partitions of range(p).

    For point processes (r = n) the p-th power of nu splits over all
    partitions; below full codimension (r < n) only the off-diagonal part
    survives.

    Raises:
        ValidationError: If a required partition is missing
    """
    if p < 1:
        raise ValidationError("Moment order must be >= 1", field="p")
    needed = all_partitions(p) if r == n else [Partition.discrete(p)]
    missing = [part.as_lists() for part in needed if part not in factorials]
    if missing:
        raise ValidationError(f"Missing factorial moments for partitions {missing}", field="factorials")
    return math.fsum(factorials[part] for part in needed)


def assemble_moment(
    values: Mapping[int, float],
    p: int,
    r: int,
    n: int,
    std_errors: Mapping[int, float] | None = None,
) -> tuple[float, float]:
    """
    p-th moment and a conservative SE from factorial moments keyed by order.

    Returns:
        (moment, SE adding per-order errors with their Stirling weights)
    """
    value = moment_from_factorials(factorials_by_order(values, p), p, r, n)
    if std_errors is None:
        return value, 0.0
    if r == n:
        se = math.fsum(stirling2(p, k) * std_errors[k] for k in range(1, p + 1))
    else:
        se = std_errors[p]
    return value, se
