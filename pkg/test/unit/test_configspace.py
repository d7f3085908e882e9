"""Unit tests for configurations, partitions and evaluation kernels."""

import math

import numpy as np
import pytest

from multijet.core.configspace import (
    BlowupSite,
    Configuration,
    OffDiagonalSite,
    Partition,
    Subspace,
    all_partitions,
    blowup_kernel,
    constant_path,
    eval_matrix,
    ev_kernel,
    ev_kernel_cluster,
    lagrange_frame,
    limit_probe,
    multijet2,
    multijet_cluster,
    multijet_offdiag,
    newton_frame,
    partition_intersection_check,
    rotated_line_kernel,
    spiral_path,
    splitting_matrix,
    subspace_angle,
    symmetric_path,
)
from multijet.core.functions import build_function
from multijet.core.interp import kergin
from multijet.exceptions import DimensionMismatchError, RankDeficientError, ValidationError
from multijet.types import FunctionSpec


class TestPartition:
    """Tests for set partitions."""

    @pytest.mark.parametrize("p,bell", [(1, 1), (2, 2), (3, 5), (4, 15), (5, 52)])
    def test_bell_numbers(self, p, bell):
        """Test that all_partitions enumerates Bell(p) partitions."""
        partitions = all_partitions(p)
        assert len(partitions) == bell
        assert len({tuple(tuple(c) for c in q.as_lists()) for q in partitions}) == bell

    def test_cells_must_cover(self):
        """Test that non-covering cells raise."""
        with pytest.raises(ValidationError):
            Partition.of([[0], [2]])

    def test_cells_must_be_disjoint(self):
        """Test that overlapping cells raise."""
        with pytest.raises(ValidationError):
            Partition.of([[0, 1], [1, 2]])

    def test_canonical_order(self):
        """Test that cells are sorted by their smallest element."""
        assert Partition.of([[2], [1, 0]]).as_lists() == [[0, 1], [2]]


class TestConfiguration:
    """Tests for configurations and clustering."""

    def test_clustering_partition(self):
        """Test that points within tolerance are grouped transitively."""
        config = Configuration(np.array([[0.0], [0.05], [0.1], [3.0]]), cluster_tol=0.06)
        assert config.clustering_partition.as_lists() == [[0, 1, 2], [3]]
        assert not config.is_off_diagonal

    def test_default_tolerance_is_relative(self):
        """Test the default tolerance 1e-9 (diameter + 1)."""
        config = Configuration(np.array([[0.0], [3.0]]))
        assert config.cluster_tol == pytest.approx(4e-9)
        assert config.is_off_diagonal

    def test_restrict(self):
        """Test sub-configurations in increasing index order."""
        config = Configuration(np.array([[0.0], [1.0], [2.0]]))
        np.testing.assert_array_equal(config.restrict([2, 0]).points, [[0.0], [2.0]])
        with pytest.raises(ValidationError):
            config.restrict([5])


class TestEvKernel:
    """Tests for the kernel of the evaluation map."""

    def test_two_points_on_vertical_line(self):
        """Test that (0,0), (0,1) give span(X1)."""
        G = ev_kernel(Configuration(np.array([[0.0, 0.0], [0.0, 1.0]])))
        assert G.dim == 1
        assert subspace_angle(G, Subspace(np.array([[0.0], [1.0], [0.0]]))) < 1e-12

    @pytest.mark.parametrize("n,p", [(1, 3), (2, 3), (2, 4), (3, 3)])
    def test_codimension_is_p(self, n, p):
        """Test codim G(x) = p off the diagonal."""
        rng = np.random.default_rng(n * 10 + p)
        config = Configuration(rng.uniform(-1, 1, (p, n)))
        G = ev_kernel(config)
        assert G.codim == p
        assert np.linalg.norm(eval_matrix(config, p - 1) @ G.basis) < 1e-10

    def test_diagonal_raises_with_rank(self):
        """Test that a repeated point raises RankDeficientError."""
        with pytest.raises(RankDeficientError) as exc:
            ev_kernel(Configuration(np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 1.0]])))
        assert exc.value.details["expected_rank"] == 3
        assert exc.value.observed_rank == 2

    def test_near_diagonal_reports_measured_rank(self):
        """Test that points merged by cluster_tol report the SVD rank, not the cell count."""
        with pytest.raises(RankDeficientError) as exc:
            ev_kernel(Configuration(np.array([[0.0], [1e-12], [1.0]])))
        assert exc.value.observed_rank == 3
        assert exc.value.details["cells"] == 2

    def test_rotated_line_family(self):
        """Test G((0,0), (cos t, sin t)) = span(sin t X1 - cos t X2)."""
        for theta in np.linspace(0, np.pi, 7, endpoint=False):
            pts = np.array([[0.0, 0.0], [np.cos(theta), np.sin(theta)]])
            assert subspace_angle(ev_kernel(Configuration(pts)), rotated_line_kernel(theta)) < 1e-10

    def test_blowup_kernel_is_limit(self):
        """Test that G((0,0), eps u) tends to the blow-up kernel at (0, u)."""
        u = np.array([0.6, 0.8])
        G_eps = ev_kernel(Configuration(np.array([[0.0, 0.0], 1e-6 * u])))
        assert subspace_angle(G_eps, blowup_kernel(np.zeros(2), u)) < 1e-9

    def test_blowup_needs_unit_direction(self):
        """Test that a non-unit direction raises."""
        with pytest.raises(ValidationError):
            blowup_kernel(np.zeros(2), np.array([1.0, 1.0]))


class TestSubspace:
    """Tests for Grassmannian points."""

    def test_orthonormal_basis_required(self):
        """Test that a non-orthonormal basis is rejected."""
        with pytest.raises(ValidationError):
            Subspace(np.array([[1.0], [1.0]]))

    def test_complement(self):
        """Test that the complement has the complementary dimension."""
        S = Subspace.span(np.array([[1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]))
        assert S.complement().dim == 1
        assert np.abs(S.basis.T @ S.complement().basis).max() < 1e-12

    def test_angle_requires_same_dimension(self):
        """Test that comparing subspaces of different dimension raises."""
        with pytest.raises(DimensionMismatchError):
            subspace_angle(Subspace(np.eye(3)[:, :1]), Subspace(np.eye(3)[:, :2]))


class TestPartitionIntersection:
    """Tests for the reconstruction of G(x) from cluster kernels."""

    def test_clustered_configuration(self):
        """Test G = intersection of the G~_I, with containment and additivity."""
        pts = np.array([[0.0, 0.0], [0.1, 0.05], [2.0, 1.0], [2.1, 0.9]])
        report = partition_intersection_check(Configuration(pts), Partition.of([[0, 1], [2, 3]]))
        assert report.additive
        assert max(report.containment_residuals) < 1e-9
        assert report.distance < 1e-8
        assert report.transversality_gap > 0
        assert report.passed()

    def test_cluster_kernels_have_cell_codimension(self):
        """Test codim G_I = codim G~_I = |I|."""
        pts = np.array([[0.0], [0.5], [1.5], [2.0]])
        G_I, G_tilde = ev_kernel_cluster(Configuration(pts), [0, 2])
        assert G_I.codim == 2
        assert G_tilde.codim == 2

    def test_partition_size_checked(self):
        """Test that a partition of the wrong size raises."""
        with pytest.raises(DimensionMismatchError):
            partition_intersection_check(
                Configuration(np.array([[0.0], [1.0]])), Partition.coarsest(3)
            )


class TestLimits:
    """Tests for diagonal limit probes."""

    def test_spiral_angle_is_eps(self):
        """Test that the spiral kernel is at angle eps from span(X2)."""
        rows = limit_probe(spiral_path, [1e-2, 1e-3, 1e-4], rotated_line_kernel(0.0))
        for row in rows:
            assert row.angle_to_expected == pytest.approx(row.eps, rel=1e-6)

    def test_symmetric_path_is_constant(self):
        """Test that the symmetric path gives the same kernel for every eps."""
        rows = limit_probe(symmetric_path, [1.0, 0.1, 0.01], rotated_line_kernel(0.0))
        assert all(row.angle_to_expected < 1e-12 for row in rows)

    def test_constant_path_has_zero_increments(self):
        """Test zero Cauchy increments along the constant path."""
        rows = limit_probe(constant_path, [1.0, 0.5, 0.25])
        assert rows[0].increment is None
        assert all(row.increment < 1e-12 for row in rows[1:])

    def test_epsilons_must_decrease(self):
        """Test that increasing epsilons raise."""
        with pytest.raises(ValidationError):
            limit_probe(spiral_path, [0.1, 0.2])


class TestMultijets:
    """Tests for multijets and trivialisations."""

    def test_multijet2_continuity(self):
        """Test that the off-diagonal multijet tends to the blow-up value."""
        f = build_function(FunctionSpec(name="sin", n=2, direction=[1.0, 0.5], offset=0.5))
        x, u = np.array([0.3, 0.2]), np.array([0.6, 0.8])
        limit = np.array(multijet2(f, BlowupSite(x, u)))
        near = np.array(multijet2(f, OffDiagonalSite(x, x + 1e-6 * u)))
        np.testing.assert_allclose(near, limit, atol=1e-5)

    def test_multijet2_rejects_coincident_points(self):
        """Test that x1 == x2 without a direction raises."""
        f = build_function(FunctionSpec(name="sin"))
        with pytest.raises(ValidationError):
            multijet2(f, OffDiagonalSite(np.array([0.5]), np.array([0.5])))

    def test_offdiag_multijet_is_values(self):
        """Test the evaluation trivialisation at distinct points."""
        f = build_function(FunctionSpec(name="exp"))
        config = Configuration(np.array([[0.0], [0.5], [1.0]]))
        np.testing.assert_allclose(multijet_offdiag(f, config), np.exp([0.0, 0.5, 1.0]))

    def test_offdiag_multijet_reads_values_only(self, mocker):
        """Test that the evaluation trivialisation needs no Kergin interpolant."""
        interpolate = mocker.patch("multijet.core.configspace.kergin")
        f = build_function(FunctionSpec(name="sin"))
        multijet_offdiag(f, Configuration(np.array([[0.0], [1.0]])))
        interpolate.assert_not_called()

    def test_offdiag_multijet_on_diagonal_raises(self):
        """Test that a repeated point is rejected."""
        f = build_function(FunctionSpec(name="sin"))
        with pytest.raises(RankDeficientError):
            multijet_offdiag(f, Configuration(np.array([[0.0], [0.0], [1.0]])))

    def test_cluster_multijet(self):
        """Test the I-multijet of a cell."""
        f = build_function(FunctionSpec(name="cos"))
        config = Configuration(np.array([[0.0], [1.0], [2.0]]))
        np.testing.assert_allclose(multijet_cluster(f, config, [0, 2]), np.cos([0.0, 2.0]), atol=1e-10)

    def test_lagrange_and_newton_frames_agree(self):
        """Test sum f(x_i) L_i = sum f[x_1..x_k] N_k = K(f, x)."""
        f = build_function(FunctionSpec(name="sin"))
        xs = [0.0, 0.3, 1.0, 1.4]
        lagrange = sum(
            (L.scale(math.sin(x)) for L, x in zip(lagrange_frame(xs), xs)),
            start=lagrange_frame(xs)[0].scale(0.0),
        )
        K = kergin(f, xs)
        assert lagrange.allclose(K, atol=1e-9)
        frame = newton_frame(xs)
        for k, N in enumerate(frame):
            assert N.evaluate(np.array([xs[0]])) == pytest.approx(1.0 if k == 0 else 0.0)

    def test_splitting_matrix_invertible(self):
        """Test that the partitioned multijet map is invertible off the diagonal."""
        pts = np.array([[0.0, 0.0], [0.1, 0.0], [1.0, 1.0]])
        M = splitting_matrix(Configuration(pts), Partition.of([[0, 1], [2]]))
        assert M.shape == (3, 3)
        assert abs(np.linalg.det(M)) > 1e-6
