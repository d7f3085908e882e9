"""
Empirical zero sets of sampled Gaussian fields.

Paths are sampled exactly on grids together with their first derivatives.
Zeros in 1-D are located cell by cell (one per sign change, half-open
window [a, b)) and refined on the cubic Hermite interpolant of the sampled
(f, f'), or on the function itself when an exact callable is given. In 2-D
the zeros of (f1, f2) are found by Newton steps inside candidate cells,
falling back on the winding number of the sampled values.

Moments of zero counts come with bootstrap standard errors computed from
the count histogram, so the whole report is a deterministic function of
(seed, request).
"""

import math
import warnings
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from ..config import Config
from ..exceptions import CapExceededError, ResolutionWarning, ValidationError
from ..logging import get_logger
from ..types import Box
from ..utils.parallel import map_chunks
from ..utils.seeding import stream
from ..utils.stats import combined_se, within_band
from .gaussfield import CovKernel, FieldSampler, correlation_length

logger = get_logger(__name__)

BULINSKAYA_THRESHOLD = 1e-6
MAX_SPACING = 0.05
NEWTON_STEPS = 30
NEWTON_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ZeroSet1D:
    """Zeros of a 1-D path in a half-open window, with refinement data."""

    zeros: np.ndarray
    residuals: np.ndarray
    slopes: np.ndarray
    window: tuple[float, float]
    unresolved_cells: int = 0

    @property
    def count(self) -> int:
        return int(self.zeros.size)


def _sign_change_cells(values: np.ndarray) -> np.ndarray:
    return np.nonzero(values[:-1] * values[1:] < 0)[0]


def find_zeros_1d(
    x: np.ndarray,
    values: np.ndarray,
    derivs: np.ndarray | None = None,
    fn: Callable[[float], float] | None = None,
    dfn: Callable[[float], float] | None = None,
    window: tuple[float, float] | None = None,
    xtol: float = 1e-15,
    warn: bool = True,
) -> ZeroSet1D:
    """
    Zeros of a sampled path, one per sign change.

    Args:
        x: Increasing grid covering the window
        values: f at the grid nodes
        derivs: f' at the grid nodes (enables Hermite refinement and
            the sub-grid resolution check)
        fn: Exact f, used for refinement when given
        dfn: Exact f', used for slopes when given
        window: Half-open counting window [a, b), the grid span by default
        xtol: Absolute tolerance of the root bracketing
        warn: Emit a ResolutionWarning for unresolved cells

    Returns:
        Zeros in increasing order with residuals |f(z)| and slopes |f'(z)|
    """
    x = np.asarray(x, dtype=float)
    values = np.asarray(values, dtype=float)
    if x.ndim != 1 or x.shape != values.shape or x.size < 2:
        raise ValidationError("Grid and values must be matching 1-D arrays", field="values")
    if np.any(np.diff(x) <= 0):
        raise ValidationError("Grid must be strictly increasing", field="x")
    a, b = window if window is not None else (x[0], x[-1])

    spline = None
    if derivs is not None:
        spline = CubicHermiteSpline(x, values, np.asarray(derivs, dtype=float))
    model = fn if fn is not None else spline
    if model is None:

        def model(t: float) -> float:
            return float(np.interp(t, x, values))

    zeros = [x[i] for i in np.nonzero(values == 0)[0]]
    for i in _sign_change_cells(values):
        lo, hi = x[i], x[i + 1]
        if model(lo) * model(hi) < 0:
            zeros.append(brentq(model, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps))
        else:
            # model and samples disagree in sign at a node; use the secant root
            zeros.append(lo - values[i] * (hi - lo) / (values[i + 1] - values[i]))
    zeros = np.array(sorted(z for z in zeros if a <= z < b))

    unresolved = 0
    if spline is not None:
        roots = spline.roots(extrapolate=False)
        cells = np.clip(np.searchsorted(x, roots, side="right") - 1, 0, x.size - 2)
        quiet = (values[cells] * values[cells + 1] > 0) & (roots >= a) & (roots < b)
        unresolved = len(np.unique(cells[quiet]))
        if unresolved and warn:
            warnings.warn(
                ResolutionWarning(
                    f"{unresolved} grid cells hide zeros of the interpolant without a sign change"
                ),
                stacklevel=2,
            )

    residuals = np.abs(np.array([model(z) for z in zeros])) if zeros.size else np.zeros(0)
    if dfn is not None:
        slopes = np.abs(np.array([dfn(z) for z in zeros], dtype=float))
    elif spline is not None:
        slopes = np.abs(spline(zeros, 1)) if zeros.size else np.zeros(0)
    else:
        slopes = np.abs(np.interp(zeros, x[:-1], np.diff(values) / np.diff(x)))
    return ZeroSet1D(zeros, residuals, slopes, (float(a), float(b)), unresolved)


@dataclass(frozen=True, eq=False)
class ZeroSet2D:
    """Isolated zeros of a planar map in a half-open box."""

    points: np.ndarray
    newton_failures: int = 0

    @property
    def count(self) -> int:
        return int(self.points.shape[0])


def _bilinear(corners: np.ndarray, s: float, t: float) -> np.ndarray:
    """Bilinear interpolation of corner data (2, 2, ...) at local (s, t) in [0,1]^2."""
    return (
        corners[0, 0] * (1 - s) * (1 - t)
        + corners[1, 0] * s * (1 - t)
        + corners[0, 1] * (1 - s) * t
        + corners[1, 1] * s * t
    )


def _winding_number(corners: np.ndarray) -> int:
    """Degree of (f1, f2) around the cell boundary, from the four corner values."""
    loop = [corners[0, 0], corners[1, 0], corners[1, 1], corners[0, 1], corners[0, 0]]
    angles = [math.atan2(v[1], v[0]) for v in loop]
    total = 0.0
    for a0, a1 in zip(angles, angles[1:]):
        step = a1 - a0
        step = (step + math.pi) % (2 * math.pi) - math.pi
        total += step
    return int(round(total / (2 * math.pi)))


def find_zeros_2d_points(
    gx: np.ndarray,
    gy: np.ndarray,
    values: np.ndarray,
    jacobians: np.ndarray | None = None,
    fn: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]] | None = None,
    box: tuple[Sequence[float], Sequence[float]] | None = None,
) -> ZeroSet2D:
    """
    Zeros of (f1, f2) sampled on a tensor grid.

    Args:
        gx, gy: Increasing grid coordinates
        values: (len(gx), len(gy), 2) samples of (f1, f2)
        jacobians: (len(gx), len(gy), 2, 2) samples of d f_i / d x_j
        fn: Exact map returning (value, jacobian), used for Newton when given
        box: Half-open counting box (lower, upper), the grid span by default

    Returns:
        Deduplicated zeros; cells where Newton fails are counted through
        their winding number and placed at the cell centre
    """
    gx, gy = np.asarray(gx, dtype=float), np.asarray(gy, dtype=float)
    values = np.asarray(values, dtype=float)
    if values.shape != (gx.size, gy.size, 2):
        raise ValidationError("values must have shape (nx, ny, 2)", field="values")
    lower, upper = box if box is not None else ((gx[0], gy[0]), (gx[-1], gy[-1]))
    h = min(np.min(np.diff(gx)), np.min(np.diff(gy)))

    lo = np.minimum.reduce(
        [values[:-1, :-1], values[1:, :-1], values[:-1, 1:], values[1:, 1:]]
    )
    hi = np.maximum.reduce(
        [values[:-1, :-1], values[1:, :-1], values[:-1, 1:], values[1:, 1:]]
    )
    candidates = np.argwhere(np.all((lo <= 0) & (hi >= 0), axis=-1))

    found: list[np.ndarray] = []
    failures = 0
    for i, j in candidates:
        x0, x1, y0, y1 = gx[i], gx[i + 1], gy[j], gy[j + 1]
        corners = values[i : i + 2, j : j + 2]
        jac_corners = jacobians[i : i + 2, j : j + 2] if jacobians is not None else None
        point = np.array([(x0 + x1) / 2, (y0 + y1) / 2])
        converged = False
        for _ in range(NEWTON_STEPS):
            if fn is not None:
                value, jac = fn(point)
            else:
                s, t = (point[0] - x0) / (x1 - x0), (point[1] - y0) / (y1 - y0)
                value = _bilinear(corners, s, t)
                if jac_corners is not None:
                    jac = _bilinear(jac_corners, s, t)
                else:
                    ds = (_bilinear(corners, 1, t) - _bilinear(corners, 0, t)) / (x1 - x0)
                    dt = (_bilinear(corners, s, 1) - _bilinear(corners, s, 0)) / (y1 - y0)
                    jac = np.column_stack([ds, dt])
            try:
                step = np.linalg.solve(jac, value)
            except np.linalg.LinAlgError:
                break
            point = point - step
            if np.linalg.norm(step) <= NEWTON_TOL * max(1.0, np.linalg.norm(point)):
                converged = True
                break
        inside = x0 - h / 2 <= point[0] <= x1 + h / 2 and y0 - h / 2 <= point[1] <= y1 + h / 2
        if converged and inside:
            found.append(point)
            continue
        degree = _winding_number(corners)
        if degree:
            failures += 1
            found.extend(np.array([(x0 + x1) / 2, (y0 + y1) / 2]) for _ in range(abs(degree)))

    unique: list[np.ndarray] = []
    for point in found:
        if all(np.linalg.norm(point - q) > h / 2 for q in unique):
            unique.append(point)
    kept = [
        q
        for q in unique
        if lower[0] <= q[0] < upper[0] and lower[1] <= q[1] < upper[1]
    ]
    points = np.array(sorted(kept, key=lambda q: (q[0], q[1]))).reshape(-1, 2)
    return ZeroSet2D(points, failures)


@dataclass(frozen=True)
class MomentRow:
    order: int
    kind: str  # raw or factorial
    value: float
    std_error: float


@dataclass(frozen=True)
class Comparison:
    name: str
    empirical: float
    reference: float
    empirical_se: float
    reference_se: float
    passed: bool

    @property
    def combined_se(self) -> float:
        return combined_se(self.empirical_se, self.reference_se)


@dataclass(eq=False)
class MomentReport:
    """Empirical moments of a zero count and their comparisons."""

    p_max: int
    trials: int
    counts: np.ndarray
    rows: list[MomentRow]
    mean: float
    variance: float
    target: str = "zeros"
    comparisons: list[Comparison] = field(default_factory=list)
    warnings: list[dict[str, str]] = field(default_factory=list)
    extra: dict[str, Any] = field(default_factory=dict)

    def moment(self, order: int, kind: str = "raw") -> MomentRow:
        for row in self.rows:
            if row.order == order and row.kind == kind:
                return row
        raise KeyError((order, kind))

    def compare(
        self, name: str, empirical: MomentRow, reference: float, reference_se: float = 0.0, bands: float = 3.0
    ) -> Comparison:
        """Record and return a comparison at ``bands`` combined standard errors."""
        se = combined_se(empirical.std_error, reference_se)
        comparison = Comparison(
            name,
            empirical.value,
            reference,
            empirical.std_error,
            reference_se,
            within_band(empirical.value, reference, se, bands),
        )
        self.comparisons.append(comparison)
        return comparison

    def to_dict(self) -> dict[str, Any]:
        return {
            "target": self.target,
            "p_max": self.p_max,
            "trials": self.trials,
            "mean": self.mean,
            "variance": self.variance,
            "moments": [vars(row) for row in self.rows],
            "comparisons": [
                {**vars(c), "combined_se": c.combined_se} for c in self.comparisons
            ],
            "warnings": self.warnings,
            **self.extra,
        }


def _falling_power(counts: np.ndarray, p: int) -> np.ndarray:
    out = np.ones_like(counts, dtype=float)
    for j in range(p):
        out = out * (counts - j)
    return out


def moments_from_counts(
    counts: np.ndarray, p_max: int, seed: int, resamples: int = 1000
) -> tuple[list[MomentRow], float, float]:
    """
    Raw and factorial moments of integer counts with bootstrap SEs.

    The bootstrap resamples the count histogram (multinomially), which is
    equivalent to resampling trials and costs O(resamples * max count).
    """
    counts = np.asarray(counts, dtype=int)
    T = counts.size
    hist = np.bincount(counts)
    support = np.arange(hist.size)
    boot = stream(seed, "bootstrap").multinomial(T, hist / T, size=resamples) / T
    rows = []
    for p in range(1, p_max + 1):
        for kind, weights in (
            ("raw", support.astype(float) ** p),
            ("factorial", _falling_power(support, p)),
        ):
            value = float(hist @ weights / T)
            se = float(np.std(boot @ weights, ddof=1)) if resamples > 1 else 0.0
            rows.append(MomentRow(p, kind, value, se))
    mean = float(counts.mean())
    variance = float(counts.var(ddof=1)) if T > 1 else 0.0
    return rows, mean, variance


def _grid_1d(box: Box, kernel: CovKernel, config: Config | None) -> np.ndarray:
    spacing = (config.grid_spacing if config else 0.02) * correlation_length(kernel)
    L = box.lengths[0]
    cells = max(int(math.ceil(L / spacing)), 2)
    return np.linspace(box.lower[0], box.upper[0], cells + 1)


def _grid_2d(box: Box, kernel: CovKernel, config: Config | None, override_caps: bool):
    """Tensor grid for one component with (f, df/dx1, df/dx2) under the stacked cap."""
    corr = correlation_length(kernel)
    spacing = (config.grid_spacing if config else 0.02) * corr
    cap = config.max_stacked_dim if config else 2000
    while True:
        nx = max(int(math.ceil(box.lengths[0] / spacing)), 2) + 1
        ny = max(int(math.ceil(box.lengths[1] / spacing)), 2) + 1
        if 3 * nx * ny <= cap or override_caps:
            break
        spacing *= 1.05
    if spacing > MAX_SPACING * corr:
        warnings.warn(
            ResolutionWarning(
                f"2-D grid spacing {spacing / corr:.3f} correlation lengths exceeds {MAX_SPACING}"
            ),
            stacklevel=3,
        )
    return (
        np.linspace(box.lower[0], box.upper[0], nx),
        np.linspace(box.lower[1], box.upper[1], ny),
    )


def _check_trials(trials: int, config: Config | None, override_caps: bool) -> None:
    cap = config.max_trials if config else None
    if cap is not None and trials > cap and not override_caps:
        raise CapExceededError("max_trials", trials, cap)


def _collect_warnings(caught: list[warnings.WarningMessage]) -> list[dict[str, str]]:
    out, seen = [], set()
    for w in caught:
        code = getattr(w.message, "code", "WARNING")
        key = (code, str(w.message))
        if key not in seen:
            seen.add(key)
            out.append({"code": code, "message": str(w.message)})
    return out


def _count_1d(
    kernel: CovKernel,
    box: Box,
    trials: int,
    seed: int,
    alphas: list[tuple[int, ...]],
    label: str,
    config: Config | None,
    override_caps: bool,
    threads: int | None,
    collect: Callable[[np.ndarray, np.ndarray], Any],
) -> list[Any]:
    """Sample trials of the requested derivatives on the grid and apply ``collect`` per trial."""
    grid = _grid_1d(box, kernel, config)
    sampler = FieldSampler(kernel, grid[:, None], alphas=alphas, config=config, override_caps=override_caps)
    chunk = config.chunk_size if config else 4096

    def run(idx: int, start: int, stop: int) -> list[Any]:
        draws = sampler.draw_chunk(seed, label, idx, stop - start)[:, :, 0, :]
        return [collect(grid, draw) for draw in draws]

    results = []
    for part in map_chunks(run, trials, chunk, threads):
        results.extend(part)
    return results


def empirical_moments(
    kernel: CovKernel,
    box: Box,
    p_max: int = 2,
    trials: int = 5000,
    seed: int = 0,
    r: int | None = None,
    config: Config | None = None,
    override_caps: bool = False,
    threads: int | None = None,
) -> MomentReport:
    """
    Sample moments of the number of zeros of f in the box.

    n = r = 1 counts zeros of a scalar path; n = r = 2 counts isolated zeros
    of two independent copies of the field. Positive-dimensional zero sets
    (r < n) are not measured.

    Raises:
        ValidationError: If r != n or n > 2
        CapExceededError: If the trial count or the grid exceed the caps
    """
    n = kernel.n
    r = n if r is None else r
    if r != n or n > 2:
        raise ValidationError("Empirical counting covers point processes with n = r <= 2", field="r")
    if box.n != n:
        raise ValidationError(f"Box dimension {box.n} does not match kernel dimension {n}", field="box")
    _check_trials(trials, config, override_caps)
    resamples = config.bootstrap_resamples if config else 1000

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ResolutionWarning)
        if n == 1:
            window = (box.lower[0], box.upper[0])
            results = _count_1d(
                kernel,
                box,
                trials,
                seed,
                [(0,), (1,)],
                "trials",
                config,
                override_caps,
                threads,
                lambda grid, draw: find_zeros_1d(grid, draw[:, 0], draw[:, 1], window=window, warn=False),
            )
            counts = np.array([zs.count for zs in results])
            unresolved = sum(zs.unresolved_cells for zs in results)
            slopes = np.concatenate([zs.slopes for zs in results]) if results else np.zeros(0)
            if unresolved:
                warnings.warn(
                    ResolutionWarning(f"{unresolved} cells with sub-grid zeros over {trials} trials"),
                    stacklevel=2,
                )
        else:
            counts, failures = _count_2d(kernel, box, trials, seed, config, override_caps, threads)
            slopes = None
            unresolved = failures
    rows, mean, variance = moments_from_counts(counts, p_max, seed, resamples)
    report = MomentReport(
        p_max=p_max,
        trials=trials,
        counts=counts,
        rows=rows,
        mean=mean,
        variance=variance,
        warnings=_collect_warnings(caught),
        extra={"unresolved_cells": int(unresolved)},
    )
    if slopes is not None:
        report.extra["bulinskaya"] = vars(bulinskaya_diagnostic(slopes))
    logger.info("Counted zeros", trials=trials, mean=mean, variance=variance, n=n)
    return report


def _count_2d(kernel, box, trials, seed, config, override_caps, threads) -> tuple[np.ndarray, int]:
    gx, gy = _grid_2d(box, kernel, config, override_caps)
    sites = np.array([(x, y) for x in gx for y in gy])
    sampler = FieldSampler(
        kernel, sites, alphas=[(0, 0), (1, 0), (0, 1)], config=config, override_caps=override_caps
    )
    chunk = config.chunk_size if config else 4096
    lower, upper = box.lower, box.upper

    def run(idx: int, start: int, stop: int) -> list[tuple[int, int]]:
        count = stop - start
        first = sampler.draw_chunk(seed, "trials-c0", idx, count)[:, :, 0, :]
        second = sampler.draw_chunk(seed, "trials-c1", idx, count)[:, :, 0, :]
        out = []
        for a, b in zip(first, second):
            a = a.reshape(gx.size, gy.size, 3)
            b = b.reshape(gx.size, gy.size, 3)
            values = np.stack([a[..., 0], b[..., 0]], axis=-1)
            jac = np.stack([a[..., 1:], b[..., 1:]], axis=-2)
            zs = find_zeros_2d_points(gx, gy, values, jac, box=(lower, upper))
            out.append((zs.count, zs.newton_failures))
        return out

    results = [item for part in map_chunks(run, trials, chunk, threads) for item in part]
    counts = np.array([c for c, _ in results], dtype=int)
    return counts, sum(f for _, f in results)


def rolle_interleaving(zeros: Sequence[float], critical_points: Sequence[float]) -> bool:
    """Whether every pair of consecutive zeros brackets at least one critical point."""
    crit = np.sort(np.asarray(critical_points, dtype=float))
    zeros = np.sort(np.asarray(zeros, dtype=float))
    for left, right in zip(zeros, zeros[1:]):
        i = np.searchsorted(crit, left, side="right")
        if i >= crit.size or crit[i] >= right:
            return False
    return True


def critical_points_1d(
    kernel: CovKernel,
    box: Box,
    trials: int = 5000,
    seed: int = 0,
    p_max: int = 1,
    config: Config | None = None,
    override_caps: bool = False,
    threads: int | None = None,
) -> MomentReport:
    """
    Sample moments of the number of critical points of a 1-D field.

    Critical points are zeros of f', located with (f', f'') on the grid.
    Every trial is also checked for Rolle interleaving of the zeros of f
    and the critical points; the number of violations is reported.
    """
    if kernel.n != 1:
        raise ValidationError("Critical point counting is available for n = 1", field="n")
    if kernel.max_jet < 2:
        raise ValidationError("Critical points need max_jet >= 2", field="max_jet")
    _check_trials(trials, config, override_caps)
    resamples = config.bootstrap_resamples if config else 1000
    window = (box.lower[0], box.upper[0])

    def collect(grid: np.ndarray, draw: np.ndarray) -> tuple[int, bool, np.ndarray]:
        crit = find_zeros_1d(grid, draw[:, 1], draw[:, 2], window=window, warn=False)
        zeros = find_zeros_1d(grid, draw[:, 0], draw[:, 1], window=window, warn=False)
        return crit.count, rolle_interleaving(zeros.zeros, crit.zeros), crit.slopes

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ResolutionWarning)
        results = _count_1d(
            kernel, box, trials, seed, [(0,), (1,), (2,)], "critical", config, override_caps, threads, collect
        )
    counts = np.array([c for c, _, _ in results], dtype=int)
    rows, mean, variance = moments_from_counts(counts, p_max, seed, resamples)
    slopes = np.concatenate([s for _, _, s in results]) if results else np.zeros(0)
    return MomentReport(
        p_max=p_max,
        trials=trials,
        counts=counts,
        rows=rows,
        mean=mean,
        variance=variance,
        target="critical_points",
        warnings=_collect_warnings(caught),
        extra={
            "rolle_violations": int(sum(not ok for _, ok, _ in results)),
            "bulinskaya": vars(bulinskaya_diagnostic(slopes)),
        },
    )


@dataclass(frozen=True)
class BulinskayaReport:
    """Summary of |Jac| at zeros; a zero is flagged when |Jac| < threshold."""

    zeros: int
    min_abs_jacobian: float
    median_abs_jacobian: float
    flagged: int
    flag_rate: float
    threshold: float


def bulinskaya_diagnostic(
    slopes: "Sequence[float] | Sequence[ZeroSet1D] | np.ndarray",
    threshold: float = BULINSKAYA_THRESHOLD,
) -> BulinskayaReport:
    """Flag near-degenerate zeros from |f'| (or |Jac|) at refined zeros."""
    if len(slopes) and isinstance(slopes[0], ZeroSet1D):
        values = np.concatenate([zs.slopes for zs in slopes])
    else:
        values = np.abs(np.asarray(slopes, dtype=float).reshape(-1))
    if values.size == 0:
        return BulinskayaReport(0, math.nan, math.nan, 0, 0.0, threshold)
    flagged = int(np.sum(values < threshold))
    return BulinskayaReport(
        zeros=int(values.size),
        min_abs_jacobian=float(values.min()),
        median_abs_jacobian=float(np.median(values)),
        flagged=flagged,
        flag_rate=flagged / values.size,
        threshold=threshold,
    )


@dataclass(frozen=True)
class DoublingRow:
    order: int
    kind: str
    value: float
    doubled: float
    drift: float
    combined_se: float
    stable: bool


def doubling_stability(
    report: MomentReport, doubled: MomentReport, bands: float = 3.0
) -> list[DoublingRow]:
    """
    Drift of every moment when the trial count doubles.

    A proxy for finiteness of the moments: a moment whose estimate keeps
    moving by more than ``bands`` combined SEs is reported unstable.
    """
    rows = []
    for row in report.rows:
        other = doubled.moment(row.order, row.kind)
        se = combined_se(row.std_error, other.std_error)
        drift = other.value - row.value
        rows.append(
            DoublingRow(row.order, row.kind, row.value, other.value, drift, se, abs(drift) <= bands * se)
        )
    return rows


@dataclass(frozen=True, eq=False)
class PathSample:
    """One sampled path with its zeros, for plotting."""

    grid: np.ndarray
    values: np.ndarray
    derivs: np.ndarray
    zeros: ZeroSet1D


def sample_paths(
    kernel: CovKernel,
    box: Box,
    paths: int,
    seed: int,
    config: Config | None = None,
    override_caps: bool = False,
) -> list[PathSample]:
    """Sampled 1-D paths with their located zeros."""
    if kernel.n != 1:
        raise ValidationError("Path sampling is available for n = 1", field="n")
    window = (box.lower[0], box.upper[0])
    return _count_1d(
        kernel,
        box,
        paths,
        seed,
        [(0,), (1,)],
        "paths",
        config,
        override_caps,
        1,
        lambda grid, draw: PathSample(
            grid, draw[:, 0], draw[:, 1], find_zeros_1d(grid, draw[:, 0], draw[:, 1], window=window, warn=False)
        ),
    )
