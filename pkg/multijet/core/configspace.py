"""
Configurations, partitions and kernels of evaluation maps.

A configuration is an ordered p-tuple of points of R^n. Off the large
diagonal the evaluation map ev: R_{p-1}[X] -> R^p, P -> (P(x1), ..., P(xp)),
is surjective and its kernel G(x) is a point of the Grassmannian of
codimension-p subspaces. Subspaces are stored by orthonormal bases in
coefficient space (graded-lex monomial basis).

Index sets and partitions are 0-based throughout.
"""

from collections.abc import Callable, Iterable, Iterator, Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space, subspace_angles
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import pdist, squareform

from ..exceptions import DimensionMismatchError, RankDeficientError, ValidationError
from ..logging import get_logger
from .functions import FnOracle
from .interp import kergin, kergin_operator
from .polycore import Poly, basis_size, monomial_exponents, monomial_values

logger = get_logger(__name__)

CLUSTER_TOL_FACTOR = 1e-9


@dataclass(frozen=True)
class Partition:
    """A partition of range(p) into non-empty disjoint cells."""

    cells: tuple[frozenset[int], ...]

    def __post_init__(self):
        cells = tuple(
            sorted((frozenset(int(i) for i in c) for c in self.cells), key=min)
            if all(self.cells)
            else ()
        )
        if len(cells) != len(self.cells) or not cells:
            raise ValidationError("Partition cells must be non-empty", field="cells")
        union = set().union(*cells)
        if sum(len(c) for c in cells) != len(union) or union != set(range(len(union))):
            raise ValidationError(
                f"Cells {[sorted(c) for c in cells]} do not partition range(p)",
                field="cells",
            )
        object.__setattr__(self, "cells", cells)

    @classmethod
    def of(cls, cells: Iterable[Iterable[int]]) -> "Partition":
        return cls(tuple(frozenset(c) for c in cells))

    @classmethod
    def discrete(cls, p: int) -> "Partition":
        return cls.of([i] for i in range(p))

    @classmethod
    def coarsest(cls, p: int) -> "Partition":
        return cls.of([range(p)])

    @property
    def p(self) -> int:
        return sum(len(c) for c in self.cells)

    @property
    def is_discrete(self) -> bool:
        return all(len(c) == 1 for c in self.cells)

    def __len__(self) -> int:
        return len(self.cells)

    def __iter__(self) -> Iterator[frozenset[int]]:
        return iter(self.cells)

    def as_lists(self) -> list[list[int]]:
        return [sorted(c) for c in self.cells]


def all_partitions(p: int) -> list[Partition]:
    """Every set partition of range(p) (Bell(p) of them)."""

    def build(items: list[int]) -> Iterator[list[list[int]]]:
        if not items:
            yield []
            return
        first, rest = items[0], items[1:]
        for smaller in build(rest):
            yield [[first], *smaller]
            for i in range(len(smaller)):
                yield [*smaller[:i], [first, *smaller[i]], *smaller[i + 1 :]]

    return [Partition.of(cells) for cells in build(list(range(p)))]


@dataclass(frozen=True, eq=False)
class Configuration:
    """An ordered p-tuple of points of R^n with a clustering tolerance."""

    points: np.ndarray
    cluster_tol: float | None = None

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float)).copy()
        if pts.shape[0] == 0:
            raise ValidationError("A configuration needs at least one point", field="points")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if self.cluster_tol is None:
            object.__setattr__(
                self, "cluster_tol", CLUSTER_TOL_FACTOR * (self.diameter + 1.0)
            )
        elif self.cluster_tol < 0:
            raise ValidationError("cluster_tol must be non-negative", field="cluster_tol")

    @property
    def p(self) -> int:
        return self.points.shape[0]

    @property
    def n(self) -> int:
        return self.points.shape[1]

    @property
    def diameter(self) -> float:
        return float(pdist(self.points).max()) if self.p > 1 else 0.0

    @property
    def clustering_partition(self) -> Partition:
        """Cells of the transitive closure of |xi - xj| <= cluster_tol."""
        if self.p == 1:
            return Partition.discrete(1)
        adjacency = squareform(pdist(self.points)) <= self.cluster_tol
        n_comp, labels = connected_components(csr_matrix(adjacency), directed=False)
        return Partition.of(np.flatnonzero(labels == c) for c in range(n_comp))

    @property
    def is_off_diagonal(self) -> bool:
        return self.clustering_partition.is_discrete

    def restrict(self, cell: Iterable[int]) -> "Configuration":
        """The sub-configuration x_I, in increasing index order."""
        idx = sorted(int(i) for i in cell)
        if not idx or idx[0] < 0 or idx[-1] >= self.p:
            raise ValidationError(f"Invalid index set {idx}", field="I")
        return Configuration(self.points[idx], self.cluster_tol)


@dataclass(frozen=True, eq=False)
class Subspace:
    """A point of a Grassmannian: an orthonormal basis of a subspace of R^N."""

    basis: np.ndarray
    ambient_dim: int = field(default=-1)

    def __post_init__(self):
        basis = np.asarray(self.basis, dtype=float)
        if basis.ndim != 2:
            raise ValidationError("A subspace basis must be a matrix", field="basis")
        ambient = basis.shape[0] if self.ambient_dim < 0 else self.ambient_dim
        if basis.shape[0] != ambient:
            raise DimensionMismatchError(ambient, basis.shape[0], field="basis")
        if basis.shape[1] and not np.allclose(
            basis.T @ basis, np.eye(basis.shape[1]), atol=1e-10
        ):
            raise ValidationError("Subspace basis is not orthonormal", field="basis")
        basis = basis.copy()
        basis.setflags(write=False)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "ambient_dim", ambient)

    @classmethod
    def span(cls, vectors: np.ndarray) -> "Subspace":
        """Orthonormalised span of the columns of ``vectors`` (assumed independent)."""
        q, _ = np.linalg.qr(np.asarray(vectors, dtype=float))
        return cls(q)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def codim(self) -> int:
        return self.ambient_dim - self.dim

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.T

    def complement(self) -> "Subspace":
        if self.dim == 0:
            return Subspace(np.eye(self.ambient_dim))
        return Subspace(null_space(self.basis.T), self.ambient_dim)

    def containment_residual(self, other: "Subspace") -> float:
        """Norm of the part of ``other`` outside this subspace (0 iff other is inside)."""
        if other.dim == 0:
            return 0.0
        outside = other.basis - self.basis @ (self.basis.T @ other.basis)
        return float(np.linalg.norm(outside, 2))


def numerical_rank(matrix: np.ndarray) -> tuple[int, np.ndarray]:
    """Rank with tolerance N * eps * sigma_max, and the singular values."""
    sv = np.linalg.svd(matrix, compute_uv=False)
    if sv.size == 0:
        return 0, sv
    tol = max(matrix.shape) * np.finfo(float).eps * sv[0]
    return int(np.sum(sv > tol)), sv


def eval_matrix(config: Configuration, degree: int) -> np.ndarray:
    """Matrix of ev_x on R_degree[X]: row i holds x_i^alpha in graded-lex order."""
    return monomial_values(config.points, monomial_exponents(config.n, degree))


def _kernel_of(matrix: np.ndarray, expected_rank: int, **details) -> Subspace:
    rank, _ = numerical_rank(matrix)
    if rank < expected_rank:
        raise RankDeficientError(rank, expected_rank, **details)
    _, _, vt = np.linalg.svd(matrix)
    basis = vt[expected_rank:].T
    return Subspace(basis, matrix.shape[1])


def ev_kernel(config: Configuration) -> Subspace:
    """
    Kernel G(x) of ev_x on R_{p-1}[X], codimension p.

    Raises:
        RankDeficientError: If the configuration lies within cluster_tol of
            the large diagonal or ev_x has numerical rank below p
    """
    matrix = eval_matrix(config, config.p - 1)
    clusters = config.clustering_partition
    if not clusters.is_discrete:
        rank, _ = numerical_rank(matrix)
        raise RankDeficientError(
            rank, config.p, cells=len(clusters), clusters=clusters.as_lists()
        )
    kernel = _kernel_of(matrix, config.p)
    residual = float(np.linalg.norm(matrix @ kernel.basis)) if kernel.dim else 0.0
    logger.debug("Computed evaluation kernel", p=config.p, n=config.n, residual=residual)
    return kernel


def ev_kernel_cluster(config: Configuration, cell: Iterable[int]) -> tuple[Subspace, Subspace]:
    """
    The pair (G_I, G~_I) for an index set I.

    G_I is the kernel of ev_{x_I} on R_{|I|-1}[X]; G~_I is the kernel of
    P -> ev_{x_I}(K(P, x_I)) on R_{p-1}[X]. Both have codimension |I|.

    Raises:
        RankDeficientError: If x_I is not off-diagonal
    """
    idx = sorted(int(i) for i in cell)
    if len(idx) == config.p:
        G = ev_kernel(config)
        return G, G
    sub = config.restrict(idx)
    G_I = ev_kernel(sub)
    composed = eval_matrix(sub, sub.p - 1) @ kergin_operator(sub.points, config.p - 1)
    G_tilde = _kernel_of(composed, sub.p, cell=idx)
    return G_I, G_tilde


def subspace_angle(A: Subspace, B: Subspace) -> float:
    """Largest principal angle between two subspaces of equal dimension."""
    if A.ambient_dim != B.ambient_dim:
        raise DimensionMismatchError(A.ambient_dim, B.ambient_dim, field="ambient_dim")
    if A.codim != B.codim:
        raise DimensionMismatchError(A.codim, B.codim, field="codim")
    if A.dim == 0:
        return 0.0
    return float(np.max(subspace_angles(A.basis, B.basis)))


@dataclass(frozen=True)
class IntersectionReport:
    """Outcome of reconstructing G(x) as the intersection of the G~_I."""

    codims: list[int]
    codim_sum: int
    expected_codim: int
    containment_residuals: list[float]
    distance: float
    transversality_gap: float

    @property
    def additive(self) -> bool:
        return self.codim_sum == self.expected_codim

    def passed(self, tol: float = 1e-8) -> bool:
        return self.additive and self.distance <= tol and self.transversality_gap > 0


def partition_intersection_check(
    config: Configuration, partition: Partition
) -> IntersectionReport:
    """
    Check that G(x) is the transverse intersection of the G~_I, I in the partition.

    The intersection is computed as the orthogonal complement of the stacked
    complements of the G~_I; transversality means the stacked complements
    are linearly independent, measured by their smallest singular value.
    """
    if partition.p != config.p:
        raise DimensionMismatchError(config.p, partition.p, field="partition")
    G = ev_kernel(config)
    N = basis_size(config.n, config.p - 1)
    tilde = [ev_kernel_cluster(config, cell)[1] for cell in partition]
    complements = np.hstack([t.complement().basis for t in tilde])
    sv = np.linalg.svd(complements, compute_uv=False)
    gap = float(sv[-1]) if complements.shape[1] <= N else 0.0
    meet = null_space(complements.T) if complements.shape[1] < N else np.zeros((N, 0))
    intersection = Subspace(meet, N)
    distance = (
        subspace_angle(intersection, G) if intersection.dim == G.dim else float(np.pi / 2)
    )
    return IntersectionReport(
        codims=[t.codim for t in tilde],
        codim_sum=sum(t.codim for t in tilde),
        expected_codim=config.p,
        containment_residuals=[t.containment_residual(G) for t in tilde],
        distance=distance,
        transversality_gap=gap,
    )


@dataclass(frozen=True)
class ProbeRow:
    """One step of a limit probe."""

    eps: float
    subspace: Subspace
    angle_to_expected: float | None
    increment: float | None


def limit_probe(
    path: Callable[[float], Configuration],
    epsilons: Sequence[float],
    expected: Subspace | None = None,
) -> list[ProbeRow]:
    """
    Follow G(path(eps)) as eps decreases.

    Args:
        path: eps -> off-diagonal configuration
        epsilons: Strictly decreasing positive parameters
        expected: Optional limit subspace to measure angles against

    Returns:
        One row per eps with the kernel, its angle to ``expected`` and the
        Cauchy increment (angle to the previous kernel)
    """
    if any(b >= a for a, b in zip(epsilons, epsilons[1:])):
        raise ValidationError("epsilons must be strictly decreasing", field="epsilons")
    rows: list[ProbeRow] = []
    previous: Subspace | None = None
    for eps in epsilons:
        G = ev_kernel(path(float(eps)))
        rows.append(
            ProbeRow(
                eps=float(eps),
                subspace=G,
                angle_to_expected=subspace_angle(G, expected) if expected is not None else None,
                increment=subspace_angle(G, previous) if previous is not None else None,
            )
        )
        previous = G
    return rows


def spiral_path(eps: float) -> Configuration:
    """eps -> ((0,0), (eps cos eps, eps sin eps)), approaching the diagonal along e1."""
    return Configuration(np.array([[0.0, 0.0], [eps * np.cos(eps), eps * np.sin(eps)]]))


def symmetric_path(eps: float) -> Configuration:
    """eps -> ((-eps, 0), (eps, 0))."""
    return Configuration(np.array([[-eps, 0.0], [eps, 0.0]]))


def constant_path(eps: float) -> Configuration:
    """The fixed configuration ((0,0), (0,1))."""
    return Configuration(np.array([[0.0, 0.0], [0.0, 1.0]]))


PATHS = {"spiral": spiral_path, "symmetric": symmetric_path, "constant": constant_path}


def rotated_line_kernel(theta: float) -> Subspace:
    """span(sin(theta) X1 - cos(theta) X2) in R_1[X] (n=2)."""
    return Subspace(np.array([[0.0], [np.sin(theta)], [-np.cos(theta)]]))


def blowup_kernel(x: np.ndarray, u: np.ndarray) -> Subspace:
    """
    Kernel of P -> (P(x), D_xP . u) on R_1[X]: the extension of G to the
    exceptional divisor for p=2.
    """
    x = np.asarray(x, dtype=float)
    u = _unit(u)
    if x.shape != u.shape:
        raise DimensionMismatchError(x.size, u.size, field="u")
    matrix = np.vstack([np.concatenate([[1.0], x]), np.concatenate([[0.0], u])])
    return _kernel_of(matrix, 2)


def _unit(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if not np.isclose(np.linalg.norm(u), 1.0, atol=1e-12):
        raise ValidationError("Direction u must have unit norm", field="u")
    return u


@dataclass(frozen=True, eq=False)
class OffDiagonalSite:
    """Two distinct points (x1, x2)."""

    x1: np.ndarray
    x2: np.ndarray


@dataclass(frozen=True, eq=False)
class BlowupSite:
    """A base point with a unit direction (x, u) on the exceptional divisor."""

    x: np.ndarray
    u: np.ndarray


def multijet2(f: FnOracle, site: OffDiagonalSite | BlowupSite) -> tuple[float, float]:
    """
    The p=2 multijet in the blow-up model.

    Off the diagonal: (f(x1), (f(x2) - f(x1)) / |x2 - x1|).
    At a blow-up point: (f(x), D_x f . u).

    Raises:
        ValidationError: x1 == x2 given without a direction
    """
    f.require(1)
    if isinstance(site, BlowupSite):
        x, u = np.asarray(site.x, dtype=float), _unit(site.u)
        grad = np.array([f.deriv(tuple(int(i == j) for j in range(f.n)), x) for i in range(f.n)])
        return f(x), float(grad @ u)
    x1, x2 = np.asarray(site.x1, dtype=float), np.asarray(site.x2, dtype=float)
    dist = float(np.linalg.norm(x2 - x1))
    if dist == 0.0:
        raise ValidationError(
            "Coincident points need direction data; use a BlowupSite", field="site"
        )
    v1 = f(x1)
    return v1, (f(x2) - v1) / dist


def multijet_offdiag(f: FnOracle, config: Configuration) -> np.ndarray:
    """
    The multijet of f at an off-diagonal configuration in the evaluation
    trivialisation: (f(x1), ..., f(xp)).

    Raises:
        RankDeficientError: If the configuration is not off-diagonal
    """
    ev_kernel(config)
    return np.asarray(f(config.points), dtype=float).reshape(-1)


def multijet_cluster(f: FnOracle, config: Configuration, cell: Iterable[int]) -> np.ndarray:
    """The I-multijet K(f, x_I) mod G_I, read as (f(x_i))_{i in I}."""
    sub = config.restrict(cell)
    ev_kernel(sub)
    return np.asarray(kergin(f, sub.points)(sub.points), dtype=float).reshape(-1)


def lagrange_frame(points: Sequence[float]) -> list[Poly]:
    """Lagrange polynomials L_i of distinct 1-D nodes, with L_i(x_j) = delta_ij."""
    config = Configuration(np.asarray(points, dtype=float).reshape(-1, 1))
    ev_kernel(config)
    vandermonde = eval_matrix(config, config.p - 1)
    inverse = np.linalg.inv(vandermonde)
    return [Poly(1, config.p - 1, inverse[:, i]) for i in range(config.p)]


def newton_frame(points: Sequence[float]) -> list[Poly]:
    """Newton polynomials N_k = prod_{i<k} (X - x_i), k = 0, ..., p-1."""
    pts = np.asarray(points, dtype=float).reshape(-1)
    p = pts.size
    frame = [Poly.constant(1, 1.0, d=p - 1)]
    X = Poly.variable(1, 0)
    for k in range(1, p):
        frame.append((frame[-1] * (X - Poly.constant(1, pts[k - 1]))).with_degree(p - 1))
    return frame


def splitting_matrix(config: Configuration, partition: Partition) -> np.ndarray:
    """
    Matrix of R_{p-1}[X]/G -> (+)_I R_{|I|-1}[X]/G_I, P -> (K(P, x_I))_I.

    Quotients are represented by the orthogonal complements of the kernels,
    so the result is a p x p matrix, invertible for off-diagonal clusters.
    """
    if partition.p != config.p:
        raise DimensionMismatchError(config.p, partition.p, field="partition")
    Q = ev_kernel(config).complement().basis
    blocks = []
    for cell in partition:
        sub = config.restrict(cell)
        Q_I = ev_kernel(sub).complement().basis
        K_I = kergin_operator(sub.points, config.p - 1)
        blocks.append(Q_I.T @ K_I @ Q)
    return np.vstack(blocks)

