"""
Acceptance suite.

Thirteen checks covering the interpolation layer, evaluation-kernel
geometry, Jacobian identities, jet non-degeneracy, and the Kac-Rice
pipeline against simulated zero counts and rejection sampling. Sizes
default to the acceptance values and can be reduced with ``--trials`` and
``--samples``. Every check draws from its own seeded stream, so the suite
is reproducible bit for bit.
"""

import math
import time
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..config import Config
from ..core.configspace import (
    BlowupSite,
    Configuration,
    OffDiagonalSite,
    all_partitions,
    ev_kernel,
    limit_probe,
    multijet2,
    partition_intersection_check,
    rotated_line_kernel,
    spiral_path,
    subspace_angle,
)
from ..core.empirics import critical_points_1d, empirical_moments
from ..core.functions import FnOracle, build_function
from ..core.gaussfield import (
    BargmannFockKernel,
    BerryKernel,
    DerivativeKernel,
    helmholtz_alignment,
    jet_covariance,
    nondegeneracy_check,
)
from ..core.interp import compatibility_rank, divdiff_1d_classical, divided_difference, kergin
from ..core.kacrice import (
    conditioning_gap,
    diagonal_scaling_probe,
    gamma,
    jacobian_g,
    jacobian_identity_gap,
    rejection_rho2,
    rho1,
    rho_p,
)
from ..core.polycore import Poly, basis_size, taylor_poly
from ..exceptions import MultijetError, ValidationError
from ..logging import get_logger
from ..types import Box, CommandResult, FunctionSpec, ValidateRequest
from ..utils.output import render_csv
from ..utils.seeding import stream
from ..utils.stats import combined_se, weighted_slope
from .moments import _moment_tables, compare_with_kacrice, factorial_integrals

logger = get_logger(__name__)

ACCEPTANCE_TRIALS = 5000
ACCEPTANCE_SAMPLES = 100_000
UNIT_INTERVAL = Box(lower=[0.0], upper=[1.0])
SCALING_GRID = [10.0**e for e in np.linspace(-3, -1, 5)]
REJECTION_INSTANCES = 20
REJECTION_DRAWS = 1_000_000


@dataclass
class ValidationContext:
    seed: int
    trials: int
    samples: int
    config: Config

    def rng(self, criterion: int) -> np.random.Generator:
        return stream(self.seed, "criterion", criterion)


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    metric: float
    threshold: str
    details: dict[str, Any] = field(default_factory=dict)


def _random_function(rng: np.random.Generator) -> FunctionSpec:
    name = str(rng.choice(["poly", "sin", "cos", "exp", "gaussian"]))
    if name == "poly":
        return FunctionSpec(name="poly", coeffs=rng.normal(size=int(rng.integers(1, 8))).tolist())
    return FunctionSpec(
        name=name,
        direction=[float(rng.uniform(-2, 2))],
        offset=float(rng.uniform(-1, 1)),
        scale=float(rng.uniform(0.5, 2)),
    )


def hermite_genocchi(ctx: ValidationContext) -> CriterionResult:
    """Simplex-integral divided differences against the classical recursion (n=1)."""
    rng = ctx.rng(1)
    worst = 0.0
    failures = 0
    for _ in range(500):
        spec = _random_function(rng)
        f = build_function(spec)
        m = int(rng.integers(1, 4))
        base = rng.permutation(np.linspace(-1, 1, 9))[:m] + rng.uniform(-0.05, 0.05, m)
        points = np.repeat(base, rng.integers(1, 4, m))[:6]
        a = divided_difference(f, points[:, None], config=ctx.config).coeffs[0]
        b = divdiff_1d_classical(points, f)
        err = abs(a - b) / max(abs(b), 1.0)
        tol = 1e-10 if spec.name == "poly" else 1e-6
        worst = max(worst, err / tol)
        failures += err > tol
    return CriterionResult(
        1, "hermite_genocchi", failures == 0, worst, "relative error / tolerance <= 1", {"cases": 500, "failures": failures}
    )


def kergin_identities(ctx: ValidationContext) -> CriterionResult:
    """Identity on R_{p-1}[X], subset divided-difference matching, Taylor at coincident points."""
    rng = ctx.rng(2)
    identity_err = subset_err = taylor_err = 0.0
    for _ in range(200):
        n, p = int(rng.integers(1, 4)), int(rng.integers(1, 6))
        pts = rng.uniform(-1, 1, (p, n))

        P = Poly(n, p - 1, rng.normal(size=basis_size(n, p - 1)))
        K = kergin(FnOracle.from_poly(P), pts)
        identity_err = max(identity_err, float(np.max(np.abs(K.coeffs - P.coeffs))))

        f = build_function(
            FunctionSpec(name="sin", n=n, direction=rng.uniform(-1, 1, n).tolist(), offset=float(rng.uniform(-1, 1)))
        )
        Kf = FnOracle.from_poly(kergin(f, pts, config=ctx.config))
        subset = sorted(rng.choice(p, size=int(rng.integers(1, p + 1)), replace=False))
        gap = divided_difference(f, pts[subset], config=ctx.config).coeffs - divided_difference(Kf, pts[subset]).coeffs
        subset_err = max(subset_err, float(np.max(np.abs(gap))))

        Q = Poly(n, p + 1, rng.normal(size=basis_size(n, p + 1)))
        x = pts[0]
        coincident = kergin(FnOracle.from_poly(Q), np.repeat(x[None, :], p, axis=0))
        taylor = taylor_poly(Q.jet(x, p - 1), x, p - 1)
        taylor_err = max(taylor_err, float(np.max(np.abs(coincident.coeffs - taylor.coeffs))))
    passed = identity_err <= 1e-9 and subset_err <= 1e-6 and taylor_err <= 1e-9
    return CriterionResult(
        2,
        "kergin_identities",
        passed,
        max(identity_err / 1e-9, subset_err / 1e-6, taylor_err / 1e-9),
        "identity <= 1e-9, subsets <= 1e-6, taylor <= 1e-9",
        {"identity": identity_err, "subsets": subset_err, "taylor": taylor_err, "configs": 200},
    )


def _clustered_points(rng: np.random.Generator, n: int, cells: list[list[int]]) -> np.ndarray:
    p = sum(len(c) for c in cells)
    pts = np.zeros((p, n))
    for j, cell in enumerate(cells):
        centre = np.zeros(n)
        centre[0] = 2.0 * j
        if n > 1:
            centre[1] = float(rng.uniform(-0.5, 0.5))
        for i in cell:
            pts[i] = centre + rng.uniform(-0.1, 0.1, n)
    return pts


def compatibility(ctx: ValidationContext) -> CriterionResult:
    """Full rank of P -> (K(P, x_I))_I on clustered configurations."""
    rng = ctx.rng(3)
    deficient = 0
    for _ in range(50):
        n, p = int(rng.integers(1, 3)), int(rng.integers(2, 5))
        partitions = all_partitions(p)
        cells = partitions[int(rng.integers(len(partitions)))].as_lists()
        rank, expected = compatibility_rank(_clustered_points(rng, n, cells), cells)
        deficient += rank != expected
    return CriterionResult(
        3, "kergin_compatibility", deficient == 0, float(deficient), "rank deficient configs = 0", {"configs": 50}
    )


def kernel_geometry(ctx: ValidationContext) -> CriterionResult:
    """Codimension, containment, transverse reconstruction and the rotated-line family."""
    rng = ctx.rng(4)
    containment = distance = 0.0
    codim_ok = True
    for _ in range(20):
        n, p = int(rng.integers(1, 3)), int(rng.integers(2, 5))
        config = Configuration(rng.uniform(-1, 1, (p, n)))
        codim_ok &= ev_kernel(config).codim == p
        partitions = all_partitions(p)
        report = partition_intersection_check(config, partitions[int(rng.integers(len(partitions)))])
        containment = max(containment, *report.containment_residuals)
        distance = max(distance, report.distance)
    family = 0.0
    for theta in np.linspace(0, np.pi, 25, endpoint=False):
        G = ev_kernel(Configuration(np.array([[0.0, 0.0], [np.cos(theta), np.sin(theta)]])))
        family = max(family, subspace_angle(G, rotated_line_kernel(theta)))
    passed = codim_ok and containment <= 1e-9 and distance <= 1e-8 and family <= 1e-10
    return CriterionResult(
        4,
        "kernel_geometry",
        passed,
        max(containment / 1e-9, distance / 1e-8, family / 1e-10),
        "containment <= 1e-9, reconstruction <= 1e-8, family <= 1e-10",
        {"codim_ok": codim_ok, "containment": containment, "distance": distance, "family": family},
    )


def blowup_limit(ctx: ValidationContext) -> CriterionResult:
    """Spiral-path angle ~ eps, and continuity of the p=2 multijet onto the exceptional divisor."""
    epsilons = [10.0**-k for k in range(1, 6)]
    rows = limit_probe(spiral_path, epsilons, rotated_line_kernel(0.0))
    slope, _, _ = weighted_slope(
        [math.log(r.eps) for r in rows], [math.log(r.angle_to_expected) for r in rows]
    )
    f = build_function(FunctionSpec(name="sin", n=2, direction=[1.0, 0.5], offset=0.5))
    x, u = np.array([0.3, 0.2]), np.array([0.6, 0.8])
    limit = np.array(multijet2(f, BlowupSite(x, u)))
    steps = [10.0**-k for k in range(1, 5)]
    gaps = [
        float(np.max(np.abs(np.array(multijet2(f, OffDiagonalSite(x, x + h * u))) - limit)))
        for h in steps
    ]
    continuity, _, _ = weighted_slope(np.log(steps), np.log(gaps))
    passed = abs(slope - 1) <= 0.05 and continuity >= 0.9
    return CriterionResult(
        5,
        "blowup_limit",
        passed,
        abs(slope - 1),
        "|angle slope - 1| <= 0.05, continuity slope >= 0.9",
        {"angle_slope": slope, "continuity_slope": continuity},
    )


def comparing_jacobians(ctx: ValidationContext) -> CriterionResult:
    """gamma_r(ker L) Jac(L) = gamma(g) Jac_g(L) on random metrics and maps."""
    rng = ctx.rng(6)
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 7))
        r = int(rng.integers(1, n + 1))
        A = rng.normal(size=(n, n))
        g = A @ A.T + n * np.eye(n)
        L = rng.normal(size=(r, n))
        scale = max(1.0, gamma(g) * jacobian_g(L, g))
        worst = max(worst, jacobian_identity_gap(L, g) / scale)
    return CriterionResult(6, "comparing_jacobians", worst <= 1e-10, worst, "<= 1e-10", {"cases": 200})


def nondegeneracy(ctx: ValidationContext) -> CriterionResult:
    """Bargmann-Fock jets certified for q <= 3; Berry n=2 certified at q=1 and degenerate at q=2."""
    threshold = ctx.config.certification_threshold
    bf = min(
        nondegeneracy_check(BargmannFockKernel(n=n), q, threshold=threshold).min_eigenvalue
        for n in (1, 2)
        for q in range(4)
    )
    berry = BerryKernel(n=2)
    first = nondegeneracy_check(berry, 1, threshold=threshold)
    second = nondegeneracy_check(berry, 2, threshold=threshold)
    alignment = helmholtz_alignment(second)
    passed = bf > 0.05 and first.certified and second.min_eigenvalue <= 1e-8 and alignment > 0.999
    return CriterionResult(
        7,
        "nondegeneracy",
        passed,
        second.min_eigenvalue,
        "BF min eig > 0.05; Berry q=1 certified, q=2 min eig <= 1e-8, alignment > 0.999",
        {
            "bargmann_fock_min_eigenvalue": bf,
            "berry_q1_min_eigenvalue": first.min_eigenvalue,
            "berry_q2_min_eigenvalue": second.min_eigenvalue,
            "helmholtz_alignment": alignment,
        },
    )


def kacrice_expectation(ctx: ValidationContext) -> CriterionResult:
    """rho_1 = 1/pi for Bargmann-Fock n=r=1, and the empirical mean count on [0,1]."""
    kernel = BargmannFockKernel(n=1)
    density = rho1(kernel)
    exact = abs(density.value - 1 / math.pi)
    report = empirical_moments(kernel, UNIT_INTERVAL, 1, ctx.trials, ctx.seed, config=ctx.config)
    comparison = report.compare("mean", report.moment(1, "raw"), 1 / math.pi)
    return CriterionResult(
        8,
        "kacrice_expectation",
        exact <= 1e-12 and comparison.passed,
        abs(comparison.empirical - comparison.reference) / max(comparison.combined_se, 1e-300),
        "closed form to 1e-12; mean within 3 SE",
        {"rho1_error": exact, "mean": comparison.empirical, "mean_se": comparison.empirical_se, "trials": ctx.trials},
    )


def diagonal_scaling(ctx: ValidationContext) -> CriterionResult:
    """Exponent of rho_2(0, eps u): +1 on the line, -1 in the plane (r=1)."""
    slopes = {}
    for n in (1, 2):
        probe = diagonal_scaling_probe(
            BargmannFockKernel(n=n), SCALING_GRID, mc_samples=ctx.samples, seed=ctx.seed, config=ctx.config
        )
        slopes[n] = probe.slope
    passed = abs(slopes[1] - 1) <= 0.15 and abs(slopes[2] + 1) <= 0.15
    return CriterionResult(
        9,
        "diagonal_scaling",
        passed,
        max(abs(slopes[1] - 1), abs(slopes[2] + 1)),
        "|slope - expected| <= 0.15",
        {"slope_n1": slopes[1], "slope_n2": slopes[2], "samples": ctx.samples},
    )


def second_moment(ctx: ValidationContext) -> CriterionResult:
    """E[N^2] on [0,1] against the integral of rho_1 plus the double integral of rho_2."""
    kernel = BargmannFockKernel(n=1)
    report = empirical_moments(kernel, UNIT_INTERVAL, 2, ctx.trials, ctx.seed, config=ctx.config)
    integrals = factorial_integrals(kernel, UNIT_INTERVAL, 2, ctx.seed, ctx.samples, ctx.config)
    compare_with_kacrice(report, integrals, 1)
    raw = next(c for c in report.comparisons if c.name == "raw_2")
    return CriterionResult(
        10,
        "second_moment",
        raw.passed,
        abs(raw.empirical - raw.reference) / max(raw.combined_se, 1e-300),
        "within 3 combined SE",
        {"empirical": raw.empirical, "kacrice": raw.reference, "combined_se": raw.combined_se},
    )


def critical_points(ctx: ValidationContext) -> CriterionResult:
    """Bargmann-Fock critical points: sqrt(3)/pi per unit length, empirically and on the derivative field."""
    kernel = BargmannFockKernel(n=1)
    expected = math.sqrt(3) / math.pi
    derivative = rho1(DerivativeKernel(base=kernel))
    report = critical_points_1d(kernel, UNIT_INTERVAL, ctx.trials, ctx.seed, config=ctx.config)
    comparison = report.compare("critical_mean", report.moment(1, "raw"), expected)
    violations = report.extra["rolle_violations"] / ctx.trials
    passed = abs(derivative.value - expected) <= 1e-10 and comparison.passed and violations <= 0.01
    return CriterionResult(
        11,
        "critical_points",
        passed,
        abs(comparison.empirical - expected) / max(comparison.combined_se, 1e-300),
        "derivative field to 1e-10; mean within 3 SE",
        {
            "kacrice": derivative.value,
            "mean": comparison.empirical,
            "mean_se": comparison.empirical_se,
            "rolle_violation_rate": violations,
        },
    )


def _pipeline_digest(ctx: ValidationContext, threads: int) -> str:
    config = ctx.config.model_copy(update={"chunk_size": 256})
    kernel = BargmannFockKernel(n=1)
    trials = min(ctx.trials, 1000)
    report = empirical_moments(kernel, UNIT_INTERVAL, 2, trials, ctx.seed, config=config, threads=threads)
    density = rho_p(
        kernel, np.array([[0.0], [0.5]]), mc_samples=min(ctx.samples, 20_000), seed=ctx.seed, config=config, threads=threads
    )
    header, rows = _moment_tables(report)["moments"]
    rows = [*rows, [2, "rho", density.value, density.std_error]]
    return render_csv(header, rows, "determinism")


def determinism(ctx: ValidationContext) -> CriterionResult:
    """The same seed gives byte-identical tables with 1 and 3 worker threads."""
    same = _pipeline_digest(ctx, 1) == _pipeline_digest(ctx, 3)
    return CriterionResult(12, "determinism", same, float(not same), "identical bytes", {"threads": [1, 3]})


def rejection_oracle(ctx: ValidationContext) -> CriterionResult:
    """Schur-complement conditioning and rho_2 against windowed rejection sampling."""
    rng = ctx.rng(13)
    gaps = []
    for i in range(REJECTION_INSTANCES):
        n = int(rng.integers(1, 3))
        kernel = BargmannFockKernel(n=n) if i % 2 else BerryKernel(n=n)
        jc = jet_covariance(kernel, rng.uniform(-1.5, 1.5, size=(2, n)), 1)
        gap = conditioning_gap(
            jc, [jc.rows(order=0)[0]], draws=ctx.samples, seed=ctx.seed + i, config=ctx.config
        )
        gaps.append(abs(gap))
    outliers = sum(g > 3 for g in gaps)

    kernel = BargmannFockKernel(n=1)
    points = np.array([[0.0], [0.5]])
    density = rho_p(kernel, points, mc_samples=ctx.samples, seed=ctx.seed, config=ctx.config)
    oracle = rejection_rho2(
        kernel,
        points,
        draws=min(max(10 * ctx.samples, REJECTION_DRAWS), ctx.config.max_mc_samples),
        seed=ctx.seed + 1,
        config=ctx.config,
    )
    se = combined_se(density.std_error, oracle.std_error)
    rho_gap = abs(density.value - oracle.value) / max(se, 1e-300)
    return CriterionResult(
        13,
        "rejection_oracle",
        outliers <= 1 and rho_gap <= 3,
        max(max(gaps), rho_gap),
        "at most 1 of 20 traces beyond 3 SE; rho_2 within 3 combined SE",
        {
            "trace_outliers": outliers,
            "max_trace_gap": max(gaps),
            "rho2": density.value,
            "rho2_rejection": oracle.value,
            "combined_se": se,
            "windows": [vars(w) for w in oracle.windows],
        },
    )


CRITERIA: dict[int, Callable[[ValidationContext], CriterionResult]] = {
    1: hermite_genocchi,
    2: kergin_identities,
    3: compatibility,
    4: kernel_geometry,
    5: blowup_limit,
    6: comparing_jacobians,
    7: nondegeneracy,
    8: kacrice_expectation,
    9: diagonal_scaling,
    10: second_moment,
    11: critical_points,
    12: determinism,
    13: rejection_oracle,
}


def validate_impl(request: ValidateRequest, config: Config) -> CommandResult:
    """
    Implementation function for the validate command.

    Returns:
        Table ``criteria`` with one row per check; ``failures`` lists the
        checks that did not pass
    """
    ctx = ValidationContext(
        seed=request.seed,
        trials=request.trials or ACCEPTANCE_TRIALS,
        samples=request.samples or ACCEPTANCE_SAMPLES,
        config=config,
    )
    selected = sorted(set(request.only)) if request.only else sorted(CRITERIA)
    unknown = [c for c in selected if c not in CRITERIA]
    if unknown:
        raise ValidationError(f"Unknown acceptance criteria: {unknown}", field="only")
    results = []
    for number in selected:
        check = CRITERIA[number]
        start = time.time()
        try:
            result = check(ctx)
        except MultijetError as e:
            result = CriterionResult(number, check.__name__, False, math.nan, "no error", {"error": e.to_dict()})
        logger.info(
            "Acceptance check finished",
            criterion=number,
            name=result.name,
            passed=result.passed,
            duration_s=round(time.time() - start, 3),
        )
        results.append(result)
    failures = [r.name for r in results if not r.passed]
    return CommandResult(
        tables={
            "criteria": (
                ["criterion", "name", "passed", "metric", "threshold"],
                [[r.number, r.name, r.passed, r.metric, r.threshold] for r in results],
            )
        },
        report={
            "passed": not failures,
            "trials": ctx.trials,
            "samples": ctx.samples,
            "criteria": [vars(r) for r in results],
        },
        failures=failures,
    )
