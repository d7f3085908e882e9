"""
Stationary Gaussian fields: covariance kernels, jet covariances and sampling.

A kernel describes a centred stationary field through its covariance
E[f(x) f(y)] = variance * r(x - y) with r(0) = 1. Jet covariances use

    E[d^a f(x) d^b f(y)] = (-1)^{|b|} d^{a+b} r(x - y)

and are ordered site-major, then component, then multi-index in graded-lex
order. Fields with several components are independent copies coupled only
through an optional r x r component covariance.
"""

import math
from abc import ABC, abstractmethod
from collections.abc import Sequence
from dataclasses import dataclass, field, replace
from typing import Any, ClassVar

import numpy as np
from scipy.linalg import LinAlgError, cholesky, eigh

from ..config import Config
from ..context import get_chunk_size
from ..exceptions import (
    CapExceededError,
    DimensionMismatchError,
    IndefiniteCovarianceError,
    SmoothnessError,
    ValidationError,
)
from ..logging import get_logger
from ..types import KernelSpec
from ..utils.parallel import map_chunks
from ..utils.seeding import stream
from .functions import gaussian_derivative
from .polycore import MultiIndex, as_multi_index, monomial_exponents

logger = get_logger(__name__)

CERTIFICATION_THRESHOLD = 1e-8
PSD_JITTER = 1e-12
INDEFINITE_TOL = 1e-10

# J0 power series: number of terms and the radius up to which it is used.
BESSEL_SERIES_TERMS = 40
BESSEL_SERIES_RADIUS = 8.0


@dataclass(frozen=True, eq=False, kw_only=True)
class CovKernel(ABC):
    """Covariance of a centred stationary field on R^n."""

    n: int
    max_jet: int = 4
    variance: float = 1.0

    name: ClassVar[str] = "kernel"

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError(f"Kernel dimension must be >= 1, got {self.n}", field="n")
        if self.variance <= 0:
            raise ValidationError("Kernel variance must be positive", field="variance")

    @abstractmethod
    def _unit_deriv(self, gamma: tuple[int, ...], t: np.ndarray) -> np.ndarray:
        """d^gamma r at a batch of lags t (shape (m, n)) for the unit-variance kernel."""

    @property
    def max_order(self) -> int:
        return 2 * self.max_jet

    def _lags(self, t: np.ndarray) -> tuple[np.ndarray, bool]:
        t = np.asarray(t, dtype=float)
        single = t.ndim == 1
        lags = np.atleast_2d(t)
        if lags.shape[1] != self.n:
            raise DimensionMismatchError(self.n, lags.shape[1], field="t")
        return lags, single

    def r_deriv(self, gamma: "MultiIndex | Sequence[int]", t: np.ndarray) -> np.ndarray | float:
        """variance * d^gamma r(t)."""
        gamma = as_multi_index(gamma)
        if gamma.n != self.n:
            raise DimensionMismatchError(self.n, gamma.n, field="gamma")
        if gamma.length > self.max_order:
            raise SmoothnessError(gamma.length, self.max_order, name=self.name)
        lags, single = self._lags(t)
        values = self.variance * self._unit_deriv(gamma.exponents, lags)
        return float(values[0]) if single else values

    def r_eval(self, t: np.ndarray) -> np.ndarray | float:
        return self.r_deriv((0,) * self.n, t)

    def scaled(self, c: float) -> "CovKernel":
        """Kernel of c*f, covariance c^2 r."""
        return replace(self, variance=self.variance * c * c)

    def normalized(self) -> "CovKernel":
        return replace(self, variance=1.0)

    def spec(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "n": self.n,
            "parameters": {"max_jet": self.max_jet, "variance": self.variance},
        }


@dataclass(frozen=True, eq=False, kw_only=True)
class BargmannFockKernel(CovKernel):
    """r(t) = exp(-|t|^2/2)."""

    name: ClassVar[str] = "bargmann_fock"

    def _unit_deriv(self, gamma, t):
        return gaussian_derivative(gamma, t)


def _falling(e: np.ndarray, a: int) -> np.ndarray:
    out = np.ones_like(e, dtype=float)
    for j in range(a):
        out = out * (e - j)
    return out


def _bessel_terms() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    J0(|t|) = sum_m (-1)^m (|t|^2/4)^m / (m!)^2 expanded into t1^{2j} t2^{2(m-j)}.

    Truncating after BESSEL_SERIES_TERMS terms leaves a remainder below
    (R^2/4)^M / (M!)^2 ~ 1e-48 for |t| <= R = 8; derivatives of order <= 8
    multiply this by at most (2M/R)^8.
    """
    e1, e2, coef = [], [], []
    for m in range(BESSEL_SERIES_TERMS + 1):
        c = (-0.25) ** m / math.factorial(m) ** 2
        for j in range(m + 1):
            e1.append(2 * j)
            e2.append(2 * (m - j))
            coef.append(c * math.comb(m, j))
    return np.array(e1), np.array(e2), np.array(coef)


_BESSEL_E1, _BESSEL_E2, _BESSEL_COEF = _bessel_terms()


def _circle_rule(gamma: tuple[int, ...], t: np.ndarray, nodes: int) -> np.ndarray:
    """Trapezoid rule for (1/2pi) int d^gamma cos(xi(theta) . t) dtheta on the unit circle."""
    theta = 2 * np.pi * np.arange(nodes) / nodes
    xi = np.column_stack([np.cos(theta), np.sin(theta)])
    weight = np.prod(xi ** np.array(gamma), axis=1) / nodes
    phase = t @ xi.T + sum(gamma) * np.pi / 2
    return np.cos(phase) @ weight


@dataclass(frozen=True, eq=False, kw_only=True)
class BerryKernel(CovKernel):
    """Spectral measure uniform on the unit sphere: cos(t) for n=1, J0(|t|) for n=2."""

    name: ClassVar[str] = "berry"

    def __post_init__(self):
        super().__post_init__()
        if self.n not in (1, 2):
            raise ValidationError("The Berry kernel is available for n in {1, 2}", field="n")

    def _unit_deriv(self, gamma, t):
        if self.n == 1:
            return np.cos(t[:, 0] + gamma[0] * np.pi / 2)
        radius = np.linalg.norm(t, axis=1)
        out = np.empty(t.shape[0])
        near = radius <= BESSEL_SERIES_RADIUS
        if np.any(near):
            g1, g2 = gamma
            keep = (_BESSEL_E1 >= g1) & (_BESSEL_E2 >= g2)
            e1, e2 = _BESSEL_E1[keep] - g1, _BESSEL_E2[keep] - g2
            coef = (
                _BESSEL_COEF[keep]
                * _falling(_BESSEL_E1[keep], g1)
                * _falling(_BESSEL_E2[keep], g2)
            )
            tn = t[near]
            out[near] = (tn[:, :1] ** e1 * tn[:, 1:] ** e2) @ coef
        if np.any(~near):
            nodes = 2 * int(np.ceil(radius[~near].max())) + 64
            out[~near] = _circle_rule(gamma, t[~near], nodes)
        return out


@dataclass(frozen=True, eq=False, kw_only=True)
class SpectralKernel(CovKernel):
    """Finite-atom spectral kernel r(t) = sum_i w_i cos(xi_i . t), weights normalised."""

    atoms: np.ndarray
    weights: np.ndarray | None = None

    name: ClassVar[str] = "spectral"

    def __post_init__(self):
        super().__post_init__()
        atoms = np.atleast_2d(np.asarray(self.atoms, dtype=float))
        if atoms.shape[1] != self.n:
            raise DimensionMismatchError(self.n, atoms.shape[1], field="atoms")
        weights = (
            np.ones(atoms.shape[0])
            if self.weights is None
            else np.asarray(self.weights, dtype=float)
        )
        if weights.shape != (atoms.shape[0],) or np.any(weights <= 0):
            raise ValidationError("Spectral weights must be positive, one per atom", field="weights")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights / weights.sum())

    def _unit_deriv(self, gamma, t):
        factor = np.prod(self.atoms ** np.array(gamma), axis=1) * self.weights
        return np.cos(t @ self.atoms.T + sum(gamma) * np.pi / 2) @ factor

    def spec(self) -> dict[str, Any]:
        out = super().spec()
        out["parameters"].update(atoms=self.atoms.tolist(), weights=self.weights.tolist())
        return out


@dataclass(frozen=True, eq=False, kw_only=True)
class DerivativeKernel(CovKernel):
    """
    Kernel of the derivative field f' of a 1-D field (shape -r''/lambda2,
    variance lambda2 times the base variance).
    """

    base: CovKernel
    n: int = 1
    max_jet: int = field(default=-1)
    variance: float = field(default=-1.0)

    name: ClassVar[str] = "derivative"

    def __post_init__(self):
        if self.base.n != 1:
            raise ValidationError("Derivative fields are supported for n=1", field="n")
        if self.base.max_jet < 1:
            raise ValidationError("The base kernel needs max_jet >= 1", field="max_jet")
        if self.max_jet < 0:
            object.__setattr__(self, "max_jet", self.base.max_jet - 1)
        if self.variance < 0:
            object.__setattr__(self, "variance", self.base.variance * self.lambda2)
        super().__post_init__()

    @property
    def lambda2(self) -> float:
        """-r''(0) of the unit-variance base kernel."""
        return float(-self.base._unit_deriv((2,), np.zeros((1, 1)))[0])

    def _unit_deriv(self, gamma, t):
        return -self.base._unit_deriv((gamma[0] + 2,), t) / self.lambda2

    def spec(self) -> dict[str, Any]:
        out = super().spec()
        out["parameters"]["base"] = self.base.spec()
        return out


_KERNELS: dict[str, type[CovKernel]] = {
    "bargmann_fock": BargmannFockKernel,
    "berry": BerryKernel,
    "spectral": SpectralKernel,
}


def build_kernel(spec: KernelSpec) -> CovKernel:
    """Instantiate a kernel from its JSON specification."""
    params = dict(spec.parameters)
    kwargs: dict[str, Any] = {
        "n": spec.n,
        "max_jet": int(params.pop("max_jet", 4)),
        "variance": float(params.pop("variance", 1.0)),
    }
    if spec.name == "spectral":
        kwargs["atoms"] = np.asarray(params.pop("atoms"), dtype=float)
        if "weights" in params:
            kwargs["weights"] = np.asarray(params.pop("weights"), dtype=float)
    if params:
        raise ValidationError(
            f"Unknown kernel parameters: {sorted(params)}", field="kernel.parameters"
        )
    return _KERNELS[spec.name](**kwargs)


def spectral_moment(kernel: CovKernel, k: int, axis: int = 0) -> float:
    """lambda_{2k} = (-1)^k d^{2k} r(0) along one coordinate axis (with variance)."""
    gamma = [0] * kernel.n
    gamma[axis] = 2 * k
    return (-1) ** k * kernel.r_deriv(gamma, np.zeros(kernel.n))


def correlation_length(kernel: CovKernel) -> float:
    """sqrt(lambda0 / lambda2), the natural length scale of the field."""
    return math.sqrt(spectral_moment(kernel, 0) / spectral_moment(kernel, 1))


def cov_entry(
    kernel: CovKernel,
    x: np.ndarray,
    alpha: "MultiIndex | Sequence[int]",
    y: np.ndarray,
    beta: "MultiIndex | Sequence[int]",
) -> float:
    """E[d^alpha f(x) d^beta f(y)] = (-1)^{|beta|} d^{alpha+beta} r(x - y)."""
    alpha, beta = as_multi_index(alpha), as_multi_index(beta)
    lag = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    return (-1) ** beta.length * kernel.r_deriv(alpha + beta, lag)


@dataclass(frozen=True, eq=False)
class JetCov:
    """Joint covariance of (d^alpha f_c(x_j)) over sites j, components c, alphas."""

    sites: np.ndarray
    order: int
    components: int
    alphas: list[tuple[int, ...]]
    matrix: np.ndarray

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def index(self, site: int, component: int, alpha: Sequence[int]) -> int:
        a = self.alphas.index(tuple(alpha))
        return (site * self.components + component) * len(self.alphas) + a

    def rows(self, order: int | None = None, site: int | None = None) -> list[int]:
        """Rows of the given derivative order (and site), in storage order."""
        out = []
        for j in range(self.sites.shape[0]):
            if site is not None and j != site:
                continue
            for c in range(self.components):
                for alpha in self.alphas:
                    if order is None or sum(alpha) == order:
                        out.append(self.index(j, c, alpha))
        return out


def jet_covariance(
    kernel: CovKernel,
    sites: np.ndarray,
    order: int,
    components: int = 1,
    alphas: Sequence[Sequence[int]] | None = None,
    component_cov: np.ndarray | None = None,
) -> JetCov:
    """
    Covariance of the stacked jets of an r-component field at the given sites.

    Args:
        kernel: Scalar covariance kernel
        sites: Site coordinates, shape (m, n)
        order: Jet order q (all |alpha| <= q unless ``alphas`` is given)
        components: Number r of field components
        alphas: Explicit list of multi-indices to include
        component_cov: r x r covariance between components (identity if None)

    Raises:
        SmoothnessError: If q exceeds the kernel's max_jet
    """
    sites = np.atleast_2d(np.asarray(sites, dtype=float))
    if sites.shape[1] != kernel.n:
        raise DimensionMismatchError(kernel.n, sites.shape[1], field="sites")
    if alphas is None:
        alphas = [tuple(int(e) for e in a) for a in monomial_exponents(kernel.n, order)]
    else:
        alphas = [tuple(int(e) for e in a) for a in alphas]
    top = max(sum(a) for a in alphas)
    if top > kernel.max_jet:
        raise SmoothnessError(top, kernel.max_jet, name=kernel.name)
    C = np.eye(components) if component_cov is None else np.asarray(component_cov, float)
    if C.shape != (components, components):
        raise DimensionMismatchError(components, C.shape[0], field="component_cov")

    m, na = sites.shape[0], len(alphas)
    lags = (sites[:, None, :] - sites[None, :, :]).reshape(-1, kernel.n)
    by_gamma: dict[tuple[int, ...], np.ndarray] = {}
    block = np.empty((m, na, m, na))
    for a, alpha in enumerate(alphas):
        for b, beta in enumerate(alphas):
            gamma = tuple(x + y for x, y in zip(alpha, beta))
            if gamma not in by_gamma:
                by_gamma[gamma] = np.atleast_1d(kernel.r_deriv(gamma, lags)).reshape(m, m)
            block[:, a, :, b] = (-1) ** sum(beta) * by_gamma[gamma]
    full = np.einsum("jalb,cd->jcaldb", block, C).reshape(m * components * na, -1)
    full = 0.5 * (full + full.T)
    return JetCov(sites, order, components, alphas, full)


@dataclass(frozen=True)
class NondegeneracyReport:
    """Certificate (or refutation) of q-non-degeneracy at one site."""

    order: int
    components: int
    min_eigenvalue: float
    certified: bool
    null_vector: list[float]
    alphas: list[tuple[int, ...]]
    eigenvalues: list[float]


def nondegeneracy_check(
    kernel: CovKernel,
    order: int,
    components: int = 1,
    threshold: float = CERTIFICATION_THRESHOLD,
) -> NondegeneracyReport:
    """
    Smallest eigenvalue of the jet covariance at the origin.

    For a stationary kernel one site suffices. The field is certified
    q-non-degenerate when the smallest eigenvalue exceeds ``threshold``.
    """
    jc = jet_covariance(kernel, np.zeros((1, kernel.n)), order, components)
    values, vectors = eigh(jc.matrix)
    report = NondegeneracyReport(
        order=order,
        components=components,
        min_eigenvalue=float(values[0]),
        certified=bool(values[0] > threshold),
        null_vector=vectors[:, 0].tolist(),
        alphas=jc.alphas,
        eigenvalues=values.tolist(),
    )
    logger.debug(
        "Checked non-degeneracy",
        kernel=kernel.name,
        order=order,
        min_eigenvalue=report.min_eigenvalue,
        certified=report.certified,
    )
    return report


def helmholtz_pattern(alphas: Sequence[Sequence[int]]) -> np.ndarray:
    """Unit coefficient vector of f + sum_i d^2 f / dx_i^2 over the given multi-indices."""
    pattern = np.zeros(len(alphas))
    for a, alpha in enumerate(alphas):
        if sum(alpha) == 0 or (sum(alpha) == 2 and max(alpha) == 2):
            pattern[a] = 1.0
    norm = np.linalg.norm(pattern)
    return pattern / norm if norm else pattern


def helmholtz_alignment(report: NondegeneracyReport) -> float:
    """|cos| of the angle between the null vector and the Helmholtz pattern."""
    if report.components != 1 or report.order < 2:
        return 0.0
    return float(abs(np.dot(report.null_vector, helmholtz_pattern(report.alphas))))


def gaussian_factor(cov: np.ndarray, jitter: float = PSD_JITTER) -> np.ndarray:
    """
    A factor L with L L^T = cov (+ jitter * trace/N on the diagonal).

    Cholesky is tried first; positive semi-definite but singular matrices
    fall back to an eigen-decomposition with clipped eigenvalues.

    Raises:
        IndefiniteCovarianceError: If an eigenvalue stays below
            -1e-10 * the largest eigenvalue
    """
    cov = np.asarray(cov, dtype=float)
    N = cov.shape[0]
    work = 0.5 * (cov + cov.T)
    if N:
        work = work + jitter * np.trace(work) / N * np.eye(N)
    try:
        return cholesky(work, lower=True)
    except LinAlgError:
        values, vectors = eigh(work)
        if values[0] < -INDEFINITE_TOL * max(values[-1], 0.0):
            raise IndefiniteCovarianceError(float(values[0]), size=N) from None
        logger.debug("Covariance is singular, using eigen factorisation", size=N)
        return vectors * np.sqrt(np.clip(values, 0.0, None))


@dataclass(frozen=True, eq=False)
class FieldSample:
    """Joint draws of a field and requested derivatives at grid sites."""

    grid: np.ndarray
    alphas: list[tuple[int, ...]]
    components: int
    values: np.ndarray  # (draws, sites, components, alphas)
    seed: int

    def field(self, alpha: Sequence[int] | None = None, component: int = 0) -> np.ndarray:
        """Draws of d^alpha f_component at every site, shape (draws, sites)."""
        alpha = tuple(alpha) if alpha is not None else (0,) * self.grid.shape[1]
        return self.values[:, :, component, self.alphas.index(alpha)]


class FieldSampler:
    """Factorises a jet covariance once and draws from it by seeded chunks."""

    def __init__(
        self,
        kernel: CovKernel,
        grid: np.ndarray,
        order: int = 0,
        alphas: Sequence[Sequence[int]] | None = None,
        components: int = 1,
        config: Config | None = None,
        override_caps: bool = False,
    ):
        """
        Initialize the sampler.

        Args:
            kernel: Covariance kernel
            grid: Sites, shape (m, n)
            order: Jet order when ``alphas`` is None
            alphas: Explicit multi-indices to sample
            components: Number of independent components
            config: Supplies the jitter and the stacked-dimension cap
            override_caps: Allow stacked dimensions above the cap

        Raises:
            CapExceededError: If the stacked dimension exceeds the cap
        """
        self.jc = jet_covariance(kernel, grid, order, components, alphas)
        cap = config.max_stacked_dim if config else 2000
        if self.jc.size > cap and not override_caps:
            raise CapExceededError("max_stacked_dim", self.jc.size, cap)
        self.factor = gaussian_factor(self.jc.matrix, config.psd_jitter if config else PSD_JITTER)
        self.chunk_size = config.chunk_size if config else get_chunk_size()

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.jc.sites.shape[0], self.jc.components, len(self.jc.alphas)

    def draw_chunk(self, seed: int, label: str, index: int, count: int) -> np.ndarray:
        """Draws of chunk ``index`` of stream (seed, label), shape (count, sites, comps, alphas)."""
        z = stream(seed, label, index).standard_normal((count, self.jc.size))
        return (z @ self.factor.T).reshape(count, *self.shape)

    def sample(self, seed: int, draws: int, label: str = "field", threads: int | None = None) -> FieldSample:
        parts = map_chunks(
            lambda idx, start, stop: self.draw_chunk(seed, label, idx, stop - start),
            draws,
            self.chunk_size,
            threads,
        )
        return FieldSample(
            grid=self.jc.sites,
            alphas=self.jc.alphas,
            components=self.jc.components,
            values=np.concatenate(parts, axis=0),
            seed=seed,
        )


def sample_field(
    kernel: CovKernel,
    grid: np.ndarray,
    seed: int,
    order: int = 0,
    alphas: Sequence[Sequence[int]] | None = None,
    draws: int = 1,
    components: int = 1,
    config: Config | None = None,
    override_caps: bool = False,
    threads: int | None = None,
) -> FieldSample:
    """
    Exact joint Gaussian draws of a field and its derivatives on a grid.

    The same (seed, grid, request) always reproduces the same values,
    whatever the thread count.
    """
    sampler = FieldSampler(kernel, grid, order, alphas, components, config, override_caps)
    return sampler.sample(seed, draws, threads=threads)
