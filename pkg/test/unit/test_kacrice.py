"""Unit tests for Kac-Rice densities and factorial moments."""

import math
import warnings

import numpy as np
import pytest

from multijet.core.configspace import Partition, Subspace
from multijet.core.gaussfield import BargmannFockKernel, BerryKernel, DerivativeKernel, jet_covariance
from multijet.core.kacrice import (
    MetricField,
    assemble_moment,
    conditional_gaussian,
    conditioning_floor,
    conditioning_gap,
    diagonal_scaling_probe,
    factorial_moment_integral,
    factorials_by_order,
    gamma,
    gamma_r,
    jacobian,
    jacobian_g,
    jacobian_identity_gap,
    moment_from_factorials,
    rejection_moments,
    rejection_rho2,
    rho1,
    rho_p,
    stirling2,
)
from multijet.exceptions import (
    DegenerateConditioningError,
    DimensionMismatchError,
    IntegrabilityWarning,
    ValidationError,
)
from multijet.types import Box
from multijet.utils.stats import combined_se


class TestJacobians:
    """Tests for Jacobians and volume densities."""

    def test_row_vector(self):
        """Test Jac of a 1 x n matrix is its norm."""
        assert jacobian([[3.0, 4.0]]) == pytest.approx(5.0)

    def test_square(self):
        """Test Jac of a square matrix is |det|."""
        assert jacobian([[1.0, 2.0], [3.0, 4.0]]) == pytest.approx(2.0)

    def test_rank_deficient_is_zero(self):
        """Test that a non-surjective map has zero Jacobian."""
        assert jacobian([[1.0, 0.0, 0.0], [2.0, 0.0, 0.0]]) == pytest.approx(0.0, abs=1e-6)

    def test_too_many_rows(self):
        """Test that r > n raises."""
        with pytest.raises(ValidationError):
            jacobian([[1.0], [2.0]])

    def test_gamma_of_diagonal_metric(self):
        """Test gamma and its restriction for a diagonal metric."""
        g = np.diag([4.0, 9.0])
        assert gamma(g) == pytest.approx(6.0)
        assert gamma_r(g, Subspace(np.array([[1.0], [0.0]]))) == pytest.approx(2.0)
        assert gamma_r(g, np.zeros((2, 0))) == 1.0

    def test_jacobian_in_metric(self):
        """Test Jac_g(L) = (L g^-1 L^T)^{1/2}."""
        assert jacobian_g([[1.0, 0.0]], np.diag([4.0, 1.0])) == pytest.approx(0.5)

    @pytest.mark.parametrize("seed", range(5))
    def test_comparing_jacobians(self, seed):
        """Test gamma_r(ker L) Jac(L) = gamma(g) Jac_g(L) for random data."""
        rng = np.random.default_rng(seed)
        n, r = 3, 1 + seed % 3
        A = rng.normal(size=(n, n))
        g = A @ A.T + n * np.eye(n)
        L = rng.normal(size=(r, n))
        assert jacobian_identity_gap(L, g) < 1e-10 * max(1.0, gamma(g) * jacobian_g(L, g))

    def test_metric_must_be_symmetric(self):
        """Test that a non-symmetric metric raises."""
        with pytest.raises(ValidationError):
            gamma(np.array([[1.0, 0.5], [0.0, 1.0]]))

    def test_metric_must_be_positive(self):
        """Test that an indefinite metric raises."""
        with pytest.raises(ValidationError):
            MetricField.constant(np.diag([1.0, -1.0]))


class TestConditionalGaussian:
    """Tests for Gaussian conditioning."""

    def test_bivariate(self):
        """Test Var(Y | X = 0) = 1 - rho^2."""
        cov = np.array([[1.0, 0.6], [0.6, 1.0]])
        cg = conditional_gaussian(cov, [0], [1])
        assert cg.covariance[0, 0] == pytest.approx(0.64)
        assert cg.zero_density == pytest.approx(1 / math.sqrt(2 * math.pi))

    def test_singular_value_block(self):
        """Test that a singular conditioning block raises."""
        with pytest.raises(DegenerateConditioningError):
            conditional_gaussian(np.ones((3, 3)), [0, 1], [2])

    def test_ill_conditioned_value_block(self):
        """Test that a condition number above the cap raises."""
        cov = np.diag([1.0, 1e-14, 1.0])
        with pytest.raises(DegenerateConditioningError):
            conditional_gaussian(cov, [0, 1], [2])


class TestRho1:
    """Tests for the first Kac-Rice density."""

    def test_bargmann_fock_line(self):
        """Test rho_1 = 1/pi for Bargmann-Fock on the line."""
        est = rho1(BargmannFockKernel(n=1))
        assert est.method == "closed_form"
        assert est.value == pytest.approx(1 / math.pi, abs=1e-12)

    def test_bargmann_fock_plane_curve(self):
        """Test the nodal-line density 1/2 for Bargmann-Fock in the plane."""
        assert rho1(BargmannFockKernel(n=2)).value == pytest.approx(0.5, rel=1e-12)

    def test_bargmann_fock_plane_points(self):
        """Test the zero density 1/(2 pi) of a two-component field in the plane."""
        assert rho1(BargmannFockKernel(n=2), r=2).value == pytest.approx(1 / (2 * math.pi), rel=1e-12)

    def test_berry_plane(self):
        """Test rho_1 = 1/(2 sqrt 2) for the Berry field (gradient variance 1/2)."""
        assert rho1(BerryKernel(n=2)).value == pytest.approx(1 / (2 * math.sqrt(2)), rel=1e-10)

    def test_scale_invariance(self):
        """Test that c*f has the same zero density as f."""
        kernel = BargmannFockKernel(n=1)
        assert rho1(kernel.scaled(3.0)).value == pytest.approx(rho1(kernel).value, rel=1e-12)

    def test_critical_points_via_derivative_field(self):
        """Test that the zeros of f' have density sqrt(3)/pi."""
        est = rho1(DerivativeKernel(base=BargmannFockKernel(n=1)))
        assert est.value == pytest.approx(math.sqrt(3) / math.pi, abs=1e-10)

    def test_monte_carlo_with_metric(self):
        """Test the Monte Carlo path against the closed form for the Euclidean metric."""
        est = rho1(
            BargmannFockKernel(n=2),
            metric=MetricField.constant(np.eye(2)),
            mc_samples=20000,
            seed=3,
        )
        assert est.method == "monte_carlo"
        assert abs(est.value - 0.5) < 5 * est.std_error

    def test_codimension_range(self):
        """Test that r > n raises."""
        with pytest.raises(ValidationError):
            rho1(BargmannFockKernel(n=1), r=2)


class TestRhoP:
    """Tests for higher Kac-Rice densities."""

    def test_permutation_invariant(self):
        """Test that permuting the sites gives the identical estimate."""
        kernel = BargmannFockKernel(n=1)
        a = rho_p(kernel, np.array([[0.0], [0.5], [1.2]]), mc_samples=2000, seed=5)
        b = rho_p(kernel, np.array([[1.2], [0.0], [0.5]]), mc_samples=2000, seed=5)
        assert a.value == b.value

    def test_factorises_far_apart(self):
        """Test rho_2(0, x) ~ rho_1^2 for widely separated sites."""
        est = rho_p(BargmannFockKernel(n=1), np.array([[0.0], [8.0]]), mc_samples=20000, seed=1)
        assert abs(est.value - 1 / math.pi**2) < 5 * est.std_error

    def test_diagonal_raises(self):
        """Test that coincident sites raise."""
        with pytest.raises(DegenerateConditioningError):
            rho_p(BargmannFockKernel(n=1), np.array([[0.3], [0.3]]), mc_samples=200)

    def test_dimension_checked(self):
        """Test that sites of the wrong dimension raise."""
        with pytest.raises(DimensionMismatchError):
            rho_p(BargmannFockKernel(n=2), np.array([[0.0], [1.0]]), mc_samples=200)


class TestRejectionOracle:
    """Tests for the windowed rejection-sampling cross-checks."""

    def test_conditional_variance_of_a_pair(self):
        """Test Var(y | x = 0) = 0.75 for unit variances with correlation 0.5."""
        cov = np.array([[1.0, 0.5], [0.5, 1.0]])
        windowed = rejection_moments(cov, [0], 0.01, 200_000, seed=8)
        assert windowed.second_moment.shape == (1, 1)
        assert windowed.accepted > 1000
        assert abs(windowed.second_moment[0, 0] - 0.75) <= 3 * windowed.std_error[0, 0]
        assert windowed.trace == pytest.approx(windowed.second_moment[0, 0])

    def test_conditioning_matches_rejection(self):
        """Test Schur-complement traces against windowed draws on 20 random jet covariances."""
        rng = np.random.default_rng(2024)
        gaps = []
        for i in range(20):
            n = int(rng.integers(1, 3))
            kernel = BargmannFockKernel(n=n) if i % 2 else BerryKernel(n=n)
            jc = jet_covariance(kernel, rng.uniform(-1.5, 1.5, size=(2, n)), 1)
            gaps.append(conditioning_gap(jc, [jc.rows(order=0)[0]], delta=0.01, draws=100_000, seed=i))
        gaps = np.abs(gaps)
        assert np.sum(gaps > 3) <= 1
        assert gaps.max() < 4.5

    def test_empty_window_raises(self):
        """Test that a window no draw reaches is an input error."""
        with pytest.raises(ValidationError):
            rejection_moments(np.eye(2), [0], 1e-9, 100, seed=1)

    @pytest.mark.slow
    def test_rho2_bargmann_fock(self):
        """Test rho_2(0, 0.5) on the line against the zero-window extrapolation."""
        kernel = BargmannFockKernel(n=1)
        points = np.array([[0.0], [0.5]])
        mc = rho_p(kernel, points, mc_samples=100_000, seed=3)
        oracle = rejection_rho2(kernel, points, draws=2_000_000, seed=4)

        assert [w.delta for w in oracle.windows] == [0.02, 0.01, 0.005]
        assert all(w.accepted > 20 for w in oracle.windows)
        assert abs(mc.value - oracle.value) <= 3 * combined_se(mc.std_error, oracle.std_error)

    def test_rho2_needs_two_sites(self):
        """Test that three sites are rejected."""
        with pytest.raises(ValidationError):
            rejection_rho2(BargmannFockKernel(n=1), np.array([[0.0], [0.5], [1.0]]), draws=100)

    def test_rho2_needs_two_windows(self):
        """Test that a single window cannot be extrapolated."""
        with pytest.raises(ValidationError):
            rejection_rho2(BargmannFockKernel(n=1), np.array([[0.0], [0.5]]), deltas=[0.01], draws=100)


class TestDiagonalScaling:
    """Tests for the near-diagonal behaviour of rho_2."""

    def test_conditioning_floor(self):
        """Test the floor 10^-3.5 for Bargmann-Fock (condition ~ 4/eps^2)."""
        assert conditioning_floor(BargmannFockKernel(n=1)) == pytest.approx(10**-3.5)

    def test_linear_repulsion_on_line(self):
        """Test rho_2(0, eps) ~ eps on the line."""
        grid = 10.0 ** np.linspace(-3, -1, 5)
        probe = diagonal_scaling_probe(BargmannFockKernel(n=1), grid, mc_samples=20000, seed=2)
        assert probe.slope == pytest.approx(1.0, abs=0.15)
        assert all(row.stable for row in probe.rows)

    def test_grid_below_floor(self):
        """Test that a grid entirely below the floor raises."""
        with pytest.raises(ValidationError):
            diagonal_scaling_probe(BargmannFockKernel(n=1), [1e-6, 1e-7], mc_samples=200)


class TestFactorialIntegrals:
    """Tests for integrals of Kac-Rice densities over boxes."""

    def test_first_order_is_volume_times_density(self):
        """Test the integral of rho_1 over [0, 2]."""
        box = Box(lower=[0.0], upper=[2.0])
        result = factorial_moment_integral(BargmannFockKernel(n=1), box, 1)
        assert result.value == pytest.approx(2 / math.pi)

    def test_second_order_on_line(self):
        """Test that the pair integral is finite with an integrable collar."""
        box = Box(lower=[0.0], upper=[1.0])
        with warnings.catch_warnings():
            warnings.simplefilter("error", IntegrabilityWarning)
            result = factorial_moment_integral(
                BargmannFockKernel(n=1), box, 2, mc_samples=2000, seed=4, nodes=8
            )
        assert result.k == 2
        assert 0 < result.value < 1
        assert result.collar_slope == pytest.approx(1.0, abs=0.3)
        assert 0 <= result.collar < 1e-3

    def test_unsupported_order(self):
        """Test that k=3 in the plane raises."""
        box = Box(lower=[0.0, 0.0], upper=[1.0, 1.0])
        with pytest.raises(ValidationError):
            factorial_moment_integral(BargmannFockKernel(n=2), box, 3, mc_samples=200)

    def test_box_dimension(self):
        """Test that a box of the wrong dimension raises."""
        with pytest.raises(DimensionMismatchError):
            factorial_moment_integral(BargmannFockKernel(n=2), Box(lower=[0.0], upper=[1.0]), 1)

    def test_box_too_small_for_collar(self):
        """Test that a box comparable to the collar raises."""
        box = Box(lower=[0.0], upper=[0.01])
        with pytest.raises(ValidationError):
            factorial_moment_integral(BargmannFockKernel(n=1), box, 2, mc_samples=200)


class TestMomentAssembly:
    """Tests for moments from factorial moments."""

    @pytest.mark.parametrize("p,k,expected", [(3, 3, 1), (4, 2, 7), (5, 3, 25), (3, 0, 0), (0, 0, 1)])
    def test_stirling_numbers(self, p, k, expected):
        """Test Stirling numbers of the second kind."""
        assert stirling2(p, k) == expected

    def test_point_process_moments(self):
        """Test E[N^3] = F1 + 3 F2 + F3 for zero sets of full codimension."""
        assert assemble_moment({1: 2.0, 2: 5.0, 3: 7.0}, 3, 1, 1)[0] == pytest.approx(24.0)

    def test_positive_dimensional_moments(self):
        """Test that only the off-diagonal factorial moment counts when r < n."""
        assert assemble_moment({1: 2.0, 2: 5.0}, 2, 1, 2)[0] == pytest.approx(5.0)

    def test_standard_error_weights(self):
        """Test SE of E[N^2] = SE(F1) + SE(F2)."""
        _, se = assemble_moment({1: 1.0, 2: 1.0}, 2, 1, 1, {1: 0.1, 2: 0.2})
        assert se == pytest.approx(0.3)

    def test_factorials_keyed_by_partition(self):
        """Test the spread of order-keyed values over partitions."""
        spread = factorials_by_order({1: 1.0, 2: 2.0}, 2)
        assert spread[Partition.coarsest(2)] == 1.0
        assert spread[Partition.discrete(2)] == 2.0

    def test_missing_partition(self):
        """Test that a missing factorial moment raises."""
        with pytest.raises(ValidationError):
            moment_from_factorials({Partition.discrete(2): 1.0}, 2, 1, 1)
