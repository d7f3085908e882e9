"""
Multi-indices, dense polynomials and symmetric multilinear forms.

Polynomials in n variables of degree at most d are stored as dense
coefficient vectors over the graded-lexicographic monomial basis: monomials
are ordered by total degree, and within one degree lexicographically with
X1 > X2 > ... > Xn. For n=2, d=2 the basis is 1, X1, X2, X1^2, X1X2, X2^2.
``monomial_exponents`` is the single indexing function used by every module.

A symmetric k-linear form S on R^n is stored by one coefficient per
multi-index |a| = k: c_a is the tensor entry S[i1, ..., ik] for any index
sequence in which each j appears a_j times. With this convention

    S(v, ..., v) = sum_{|a|=k} (k!/a!) c_a v^a,

and the form of the k-th differential of f has c_a = d^a f.
"""

import itertools
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from functools import reduce

import numpy as np

from ..exceptions import DimensionMismatchError, MissingJetDataError, ValidationError
from ..utils.cache import memoized, shared_cache

# Full tensor expansion is used up to this order, polarization above it.
EXPANSION_MAX_ORDER = 4


@dataclass(frozen=True)
class MultiIndex:
    """Exponent vector alpha in N^n."""

    exponents: tuple[int, ...]

    def __post_init__(self):
        exps = tuple(int(e) for e in self.exponents)
        if not exps:
            raise ValidationError("A multi-index needs at least one entry", field="alpha")
        if any(e < 0 for e in exps):
            raise ValidationError(
                f"Multi-index entries must be non-negative, got {exps}", field="alpha"
            )
        object.__setattr__(self, "exponents", exps)

    @classmethod
    def zero(cls, n: int) -> "MultiIndex":
        return cls((0,) * n)

    @classmethod
    def unit(cls, n: int, i: int) -> "MultiIndex":
        return cls(tuple(1 if j == i else 0 for j in range(n)))

    @property
    def n(self) -> int:
        return len(self.exponents)

    @property
    def length(self) -> int:
        """|alpha| = alpha_1 + ... + alpha_n."""
        return sum(self.exponents)

    @property
    def factorial(self) -> int:
        """alpha! = alpha_1! ... alpha_n!."""
        return math.prod(math.factorial(e) for e in self.exponents)

    def __add__(self, other: "MultiIndex") -> "MultiIndex":
        if other.n != self.n:
            raise DimensionMismatchError(self.n, other.n, field="alpha")
        return MultiIndex(tuple(a + b for a, b in zip(self.exponents, other.exponents)))

    def __le__(self, other: "MultiIndex") -> bool:
        return all(a <= b for a, b in zip(self.exponents, other.exponents))

    def __iter__(self):
        return iter(self.exponents)

    def __str__(self) -> str:
        return "(" + ",".join(str(e) for e in self.exponents) + ")"


def as_multi_index(alpha: "MultiIndex | Sequence[int]") -> MultiIndex:
    """Coerce a tuple or list into a MultiIndex."""
    return alpha if isinstance(alpha, MultiIndex) else MultiIndex(tuple(alpha))


def _compositions(total: int, parts: int):
    """Exponent tuples of the given length summing to total, lex descending."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first, *rest)


@memoized(shared_cache)
def homogeneous_exponents(n: int, k: int) -> np.ndarray:
    """Exponents with |alpha| = k in graded-lex order, shape (m, n)."""
    return np.array(list(_compositions(k, n)), dtype=np.int64).reshape(-1, n)


@memoized(shared_cache)
def monomial_exponents(n: int, d: int) -> np.ndarray:
    """Exponents with |alpha| <= d in graded-lex order, shape (C(n+d, n), n)."""
    if n < 1 or d < 0:
        raise ValidationError(f"Need n >= 1 and d >= 0, got n={n}, d={d}")
    return np.vstack([homogeneous_exponents(n, k) for k in range(d + 1)])


@memoized(shared_cache)
def monomial_index(n: int, d: int) -> dict[tuple[int, ...], int]:
    """Map from exponent tuple to its position in the graded-lex basis."""
    return {tuple(int(e) for e in row): i for i, row in enumerate(monomial_exponents(n, d))}


def basis_size(n: int, d: int) -> int:
    """dim R_d[X] = C(n+d, n)."""
    return math.comb(n + d, n)


def monomial_values(points: np.ndarray, exponents: np.ndarray) -> np.ndarray:
    """Evaluate monomials x^alpha for every point (rows) and exponent (columns)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    return np.prod(points[:, None, :] ** exponents[None, :, :], axis=2)


def _falling(e: np.ndarray, a: int) -> np.ndarray:
    out = np.ones_like(e, dtype=float)
    for j in range(a):
        out *= e - j
    return out


@dataclass(frozen=True, eq=False)
class Poly:
    """Dense polynomial of degree at most d in n variables."""

    n: int
    d: int
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=float).copy()
        expected = basis_size(self.n, self.d)
        if coeffs.shape != (expected,):
            raise DimensionMismatchError(expected, coeffs.size, field="coeffs")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def zero(cls, n: int, d: int = 0) -> "Poly":
        return cls(n, d, np.zeros(basis_size(n, d)))

    @classmethod
    def constant(cls, n: int, c: float, d: int = 0) -> "Poly":
        coeffs = np.zeros(basis_size(n, d))
        coeffs[0] = c
        return cls(n, d, coeffs)

    @classmethod
    def from_terms(
        cls, n: int, terms: Mapping[tuple[int, ...], float], d: int | None = None
    ) -> "Poly":
        """Build from {exponent tuple: coefficient}."""
        top = max((sum(e) for e in terms), default=0)
        d = top if d is None else d
        if top > d:
            raise ValidationError(f"Term of degree {top} exceeds degree bound {d}")
        index = monomial_index(n, d)
        coeffs = np.zeros(basis_size(n, d))
        for exps, c in terms.items():
            if len(exps) != n:
                raise DimensionMismatchError(n, len(exps), field="exponents")
            coeffs[index[tuple(exps)]] += c
        return cls(n, d, coeffs)

    @classmethod
    def variable(cls, n: int, i: int) -> "Poly":
        """The coordinate polynomial X_{i+1}."""
        return cls.from_terms(n, {MultiIndex.unit(n, i).exponents: 1.0})

    @property
    def exponents(self) -> np.ndarray:
        return monomial_exponents(self.n, self.d)

    @property
    def degree(self) -> int:
        """Actual degree (0 for the zero polynomial)."""
        nonzero = np.nonzero(self.coeffs)[0]
        if nonzero.size == 0:
            return 0
        return int(self.exponents[nonzero[-1]].sum())

    def terms(self) -> dict[tuple[int, ...], float]:
        return {
            tuple(int(e) for e in exps): float(c)
            for exps, c in zip(self.exponents, self.coeffs)
            if c != 0.0
        }

    def evaluate(self, x: np.ndarray) -> np.ndarray | float:
        """Value at one point (shape (n,)) or many points (shape (m, n))."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        pts = np.atleast_2d(x)
        if pts.shape[1] != self.n:
            raise DimensionMismatchError(self.n, pts.shape[1], field="x")
        values = monomial_values(pts, self.exponents) @ self.coeffs
        return float(values[0]) if single else values

    __call__ = evaluate

    def derivative(self, alpha: "MultiIndex | Sequence[int]") -> "Poly":
        """d^alpha P, with degree bound max(d - |alpha|, 0)."""
        alpha = as_multi_index(alpha)
        if alpha.n != self.n:
            raise DimensionMismatchError(self.n, alpha.n, field="alpha")
        new_d = max(self.d - alpha.length, 0)
        if alpha.length > self.d:
            return Poly.zero(self.n, new_d)
        a = np.array(alpha.exponents)
        exps = self.exponents
        keep = np.all(exps >= a, axis=1)
        factor = np.prod(
            np.column_stack([_falling(exps[keep, i], a[i]) for i in range(self.n)]),
            axis=1,
        )
        index = monomial_index(self.n, new_d)
        coeffs = np.zeros(basis_size(self.n, new_d))
        for e, c in zip(exps[keep] - a, self.coeffs[keep] * factor):
            coeffs[index[tuple(int(v) for v in e)]] += c
        return Poly(self.n, new_d, coeffs)

    def with_degree(self, d: int) -> "Poly":
        """Re-embed into R_d[X]; truncation must not drop non-zero terms."""
        if d == self.d:
            return self
        if d < self.degree:
            raise ValidationError(
                f"Cannot store a degree {self.degree} polynomial with bound {d}"
            )
        index = monomial_index(self.n, d)
        coeffs = np.zeros(basis_size(self.n, d))
        for exps, c in zip(self.exponents, self.coeffs):
            if exps.sum() <= d:
                coeffs[index[tuple(int(v) for v in exps)]] = c
        return Poly(self.n, d, coeffs)

    def _aligned(self, other: "Poly") -> tuple[np.ndarray, np.ndarray, int]:
        if other.n != self.n:
            raise DimensionMismatchError(self.n, other.n, field="poly")
        d = max(self.d, other.d)
        return self.with_degree(d).coeffs, other.with_degree(d).coeffs, d

    def __add__(self, other: "Poly") -> "Poly":
        a, b, d = self._aligned(other)
        return Poly(self.n, d, a + b)

    def __sub__(self, other: "Poly") -> "Poly":
        a, b, d = self._aligned(other)
        return Poly(self.n, d, a - b)

    def __neg__(self) -> "Poly":
        return Poly(self.n, self.d, -self.coeffs)

    def scale(self, c: float) -> "Poly":
        return Poly(self.n, self.d, c * self.coeffs)

    def __mul__(self, other: "Poly | float") -> "Poly":
        if not isinstance(other, Poly):
            return self.scale(float(other))
        if other.n != self.n:
            raise DimensionMismatchError(self.n, other.n, field="poly")
        d = self.d + other.d
        index = monomial_index(self.n, d)
        coeffs = np.zeros(basis_size(self.n, d))
        for ea, ca in zip(self.exponents, self.coeffs):
            if ca == 0.0:
                continue
            for eb, cb in zip(other.exponents, other.coeffs):
                if cb != 0.0:
                    coeffs[index[tuple(int(v) for v in ea + eb)]] += ca * cb
        return Poly(self.n, d, coeffs)

    __rmul__ = __mul__

    def jet(self, x: np.ndarray, k: int) -> dict[MultiIndex, float]:
        """Exact jet {d^alpha P(x)}_{|alpha| <= k}."""
        return {
            MultiIndex(tuple(int(e) for e in alpha)): self.derivative(alpha).evaluate(x)
            for alpha in monomial_exponents(self.n, k)
        }

    def allclose(self, other: "Poly", atol: float = 1e-12, rtol: float = 0.0) -> bool:
        a, b, _ = self._aligned(other)
        return bool(np.allclose(a, b, atol=atol, rtol=rtol))

    def __repr__(self) -> str:
        return f"Poly(n={self.n}, d={self.d}, terms={self.terms()})"


def poly_eval(P: Poly, x: np.ndarray) -> float:
    """Value of P at the point x."""
    x = np.asarray(x, dtype=float)
    if x.shape != (P.n,):
        raise DimensionMismatchError(P.n, x.size, field="x")
    return P.evaluate(x)


def poly_derivative(P: Poly, alpha: "MultiIndex | Sequence[int]") -> Poly:
    """d^alpha P."""
    return P.derivative(alpha)


def shifted_identity(n: int, x: np.ndarray) -> np.ndarray:
    """The affine vector X - x as an (n, n+1) matrix [constant | linear part]."""
    x = np.asarray(x, dtype=float)
    if x.shape != (n,):
        raise DimensionMismatchError(n, x.size, field="x")
    return np.hstack([-x[:, None], np.eye(n)])


def affine_argument(arg: "np.ndarray | Sequence[Poly]", n: int) -> np.ndarray:
    """
    Normalise an affine argument to an (n, n+1) matrix.

    An argument is either such a matrix (row i is [c_i, a_i1, ..., a_in],
    meaning c_i + sum_j a_ij X_j) or a sequence of n polynomials of degree <= 1.
    """
    if isinstance(arg, np.ndarray):
        if arg.shape != (n, n + 1):
            raise DimensionMismatchError(n, arg.shape[0], field="args")
        return arg.astype(float)
    if len(arg) != n:
        raise DimensionMismatchError(n, len(arg), field="args")
    rows = []
    for component in arg:
        if component.n != n:
            raise DimensionMismatchError(n, component.n, field="args")
        if component.degree > 1:
            raise ValidationError(
                "Form arguments must be affine (degree <= 1)", field="args"
            )
        rows.append(component.with_degree(1).coeffs)
    return np.array(rows)


@dataclass(frozen=True, eq=False)
class SymForm:
    """Symmetric k-linear form on R^n, one coefficient per |alpha| = k."""

    n: int
    k: int
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=float).copy().reshape(-1)
        expected = math.comb(self.n + self.k - 1, self.k)
        if coeffs.shape != (expected,):
            raise DimensionMismatchError(expected, coeffs.size, field="coeffs")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def scalar(cls, n: int, c: float) -> "SymForm":
        return cls(n, 0, np.array([c]))

    @classmethod
    def zero(cls, n: int, k: int) -> "SymForm":
        return cls(n, k, np.zeros(math.comb(n + k - 1, k)))

    @classmethod
    def from_tensor(cls, tensor: np.ndarray) -> "SymForm":
        """Read the orbit representatives of a symmetric tensor."""
        tensor = np.asarray(tensor, dtype=float)
        k = tensor.ndim
        if k == 0:
            return cls(1, 0, tensor.reshape(1))
        n = tensor.shape[0]
        coeffs = [tensor[_representative(alpha)] for alpha in homogeneous_exponents(n, k)]
        return cls(n, k, np.array(coeffs))

    @property
    def exponents(self) -> np.ndarray:
        return homogeneous_exponents(self.n, self.k)

    @property
    def value(self) -> float:
        """The scalar of an order-0 form."""
        if self.k != 0:
            raise ValidationError(f"Form of order {self.k} is not a scalar")
        return float(self.coeffs[0])

    def tensor(self) -> np.ndarray:
        """Full symmetric tensor of shape (n,) * k."""
        out = np.empty((self.n,) * self.k)
        lookup = {tuple(int(e) for e in a): c for a, c in zip(self.exponents, self.coeffs)}
        for idx in itertools.product(range(self.n), repeat=self.k):
            out[idx] = lookup[tuple(idx.count(j) for j in range(self.n))]
        return out

    def __call__(self, *vectors: np.ndarray) -> float:
        """Multilinear application to k vectors of R^n."""
        if len(vectors) != self.k:
            raise ValidationError(
                f"Form of order {self.k} takes {self.k} arguments, got {len(vectors)}",
                field="args",
            )
        out = self.tensor()
        for v in vectors:
            out = np.tensordot(out, np.asarray(v, dtype=float), axes=([0], [0]))
        return float(out)

    def homogeneous(self, v: np.ndarray) -> float:
        """S(v, ..., v) = sum (k!/alpha!) c_alpha v^alpha."""
        v = np.asarray(v, dtype=float)
        weights = multinomial_weights(self.n, self.k)
        return float(np.sum(weights * self.coeffs * monomial_values(v, self.exponents)[0]))

    def __add__(self, other: "SymForm") -> "SymForm":
        if (other.n, other.k) != (self.n, self.k):
            raise DimensionMismatchError(self.k, other.k, field="form")
        return SymForm(self.n, self.k, self.coeffs + other.coeffs)

    def scale(self, c: float) -> "SymForm":
        return SymForm(self.n, self.k, c * self.coeffs)

    def allclose(self, other: "SymForm", atol: float = 1e-12, rtol: float = 0.0) -> bool:
        return (other.n, other.k) == (self.n, self.k) and bool(
            np.allclose(self.coeffs, other.coeffs, atol=atol, rtol=rtol)
        )

    def __repr__(self) -> str:
        return f"SymForm(n={self.n}, k={self.k}, coeffs={self.coeffs.tolist()})"


def _representative(alpha: np.ndarray) -> tuple[int, ...]:
    return tuple(j for j, e in enumerate(alpha) for _ in range(int(e)))


@memoized(shared_cache)
def multinomial_weights(n: int, k: int) -> np.ndarray:
    """k!/alpha! for every |alpha| = k."""
    return np.array(
        [
            math.factorial(k) / math.prod(math.factorial(int(e)) for e in alpha)
            for alpha in homogeneous_exponents(n, k)
        ]
    )


@memoized(shared_cache)
def _homogenised_targets(n: int, k: int) -> np.ndarray:
    """Graded-lex position of Y_{j1}...Y_{jk} for Y = (1, X1, ..., Xn)."""
    index = monomial_index(n, k)
    targets = []
    for js in itertools.product(range(n + 1), repeat=k):
        exps = tuple(sum(1 for j in js if j == i + 1) for i in range(n))
        targets.append(index[exps])
    return np.array(targets, dtype=np.int64)


def _apply_expanded(S: SymForm, mats: list[np.ndarray]) -> Poly:
    contracted = S.tensor()
    for A in mats:
        # contract the leading tensor slot, append the homogenised slot at the end
        contracted = np.tensordot(contracted, A, axes=([0], [0]))
    coeffs = np.bincount(
        _homogenised_targets(S.n, S.k),
        weights=contracted.reshape(-1),
        minlength=basis_size(S.n, S.k),
    )
    return Poly(S.n, S.k, coeffs)


def _affine_polys(A: np.ndarray) -> list[Poly]:
    n = A.shape[0]
    return [Poly(n, 1, A[i]) for i in range(n)]


def _apply_polarized(S: SymForm, mats: list[np.ndarray]) -> Poly:
    k, n = S.k, S.n
    weights = multinomial_weights(n, k) * S.coeffs
    total = Poly.zero(n, k)
    for size in range(1, k + 1):
        sign = (-1) ** (k - size)
        for subset in itertools.combinations(range(k), size):
            w = _affine_polys(sum(mats[j] for j in subset))
            q = Poly.zero(n, k)
            for alpha, c in zip(S.exponents, weights):
                if c == 0.0:
                    continue
                factors = [w[i] for i, e in enumerate(alpha) for _ in range(int(e))]
                q = q + reduce(lambda a, b: a * b, factors).scale(c)
            total = total + q.scale(sign)
    return total.scale(1.0 / math.factorial(k))


def symform_apply(S: SymForm, args: Sequence["np.ndarray | Sequence[Poly]"]) -> Poly:
    """
    Apply S slot-wise to affine polynomial vectors.

    Args:
        S: Symmetric form of order k
        args: k affine arguments, each an (n, n+1) matrix or n polynomials of
            degree <= 1

    Returns:
        The polynomial S(args[0], ..., args[k-1]) of degree <= k
    """
    if len(args) != S.k:
        raise ValidationError(
            f"Form of order {S.k} takes {S.k} arguments, got {len(args)}", field="args"
        )
    if S.k == 0:
        return Poly.constant(S.n, S.value)
    mats = [affine_argument(a, S.n) for a in args]
    if S.k <= EXPANSION_MAX_ORDER:
        return _apply_expanded(S, mats)
    return _apply_polarized(S, mats)


def shifted_power(x: np.ndarray, alpha: "MultiIndex | Sequence[int]") -> Poly:
    """(X - x)^alpha."""
    alpha = as_multi_index(alpha)
    x = np.asarray(x, dtype=float)
    n = alpha.n
    out = Poly.constant(n, 1.0)
    for i, e in enumerate(alpha.exponents):
        factor = Poly.variable(n, i) - Poly.constant(n, x[i])
        for _ in range(e):
            out = out * factor
    return out


def taylor_poly(
    jet: Mapping["MultiIndex | tuple[int, ...]", float], x: np.ndarray, k: int
) -> Poly:
    """
    Taylor polynomial sum_{|alpha| <= k} d^alpha f(x)/alpha! (X - x)^alpha.

    Raises:
        MissingJetDataError: If some d^alpha f(x) with |alpha| <= k is absent
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    lookup = {as_multi_index(a).exponents: float(v) for a, v in jet.items()}
    result = Poly.zero(n, k)
    for alpha in monomial_exponents(n, k):
        key = tuple(int(e) for e in alpha)
        if key not in lookup:
            raise MissingJetDataError(
                f"Jet entry d^{key} f(x) is required for order {k}", alpha=list(key)
            )
        if lookup[key] == 0.0:
            continue
        mi = MultiIndex(key)
        result = result + shifted_power(x, mi).scale(lookup[key] / mi.factorial)
    return result.with_degree(k)
