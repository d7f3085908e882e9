"""
Function oracles with exact derivatives.

An FnOracle bundles a function on R^n with exact partial derivatives up to a
declared order. Oracles are stateless and safe to call from several threads.
The built-in registry covers polynomials given by coefficients, monomials,
sin/cos/exp of an affine form a.x + b, and the Gaussian bump
exp(-|x|^2/2).
"""

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import hermite_e

from ..exceptions import DimensionMismatchError, SmoothnessError, UnknownFunctionError
from ..types import FunctionSpec
from .polycore import MultiIndex, Poly, as_multi_index, homogeneous_exponents

SMOOTH = math.inf

DerivFn = Callable[[tuple[int, ...], np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class FnOracle:
    """A C^k function on R^n with exact derivatives up to order ``smoothness``."""

    n: int
    eval_fn: Callable[[np.ndarray], np.ndarray]
    deriv_fn: DerivFn
    smoothness: float = SMOOTH
    polynomial_degree: int | None = None
    name: str = "f"

    def _batch(self, x: np.ndarray) -> tuple[np.ndarray, bool]:
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        pts = np.atleast_2d(x)
        if pts.shape[1] != self.n:
            raise DimensionMismatchError(self.n, pts.shape[1], field="x")
        return pts, single

    def __call__(self, x: np.ndarray) -> np.ndarray | float:
        pts, single = self._batch(x)
        values = np.asarray(self.eval_fn(pts), dtype=float)
        return float(values[0]) if single else values

    def deriv(self, alpha: "MultiIndex | Sequence[int]", x: np.ndarray) -> np.ndarray | float:
        """d^alpha f at one point or a batch of points."""
        alpha = as_multi_index(alpha)
        if alpha.n != self.n:
            raise DimensionMismatchError(self.n, alpha.n, field="alpha")
        self.require(alpha.length)
        if alpha.length == 0:
            return self(x)
        pts, single = self._batch(x)
        values = np.asarray(self.deriv_fn(alpha.exponents, pts), dtype=float)
        return float(values[0]) if single else values

    def require(self, order: int) -> None:
        """Raise SmoothnessError when derivatives of this order are unavailable."""
        if order > self.smoothness:
            raise SmoothnessError(order, int(self.smoothness), name=self.name)

    def differential(self, k: int, x: np.ndarray) -> np.ndarray:
        """
        Coefficients of D^k f at a batch of points.

        Returns:
            Array (m, C(n+k-1, k)) of d^alpha f for |alpha| = k in graded-lex order
        """
        self.require(k)
        pts, _ = self._batch(x)
        return np.column_stack(
            [np.atleast_1d(self.deriv(tuple(alpha), pts)) for alpha in homogeneous_exponents(self.n, k)]
        )

    @classmethod
    def from_poly(cls, P: Poly, name: str = "poly") -> "FnOracle":
        """Oracle of a polynomial, with derivatives computed exactly."""
        return cls(
            n=P.n,
            eval_fn=P.evaluate,
            deriv_fn=lambda alpha, x: P.derivative(alpha).evaluate(x),
            smoothness=SMOOTH,
            polynomial_degree=P.degree,
            name=name,
        )


def oracle_sum(f: FnOracle, g: FnOracle, a: float = 1.0, b: float = 1.0) -> FnOracle:
    """The oracle of a*f + b*g."""
    if f.n != g.n:
        raise DimensionMismatchError(f.n, g.n, field="n")
    degree = None
    if f.polynomial_degree is not None and g.polynomial_degree is not None:
        degree = max(f.polynomial_degree, g.polynomial_degree)
    return FnOracle(
        n=f.n,
        eval_fn=lambda x: a * f.eval_fn(x) + b * g.eval_fn(x),
        deriv_fn=lambda alpha, x: a * f.deriv_fn(alpha, x) + b * g.deriv_fn(alpha, x),
        smoothness=min(f.smoothness, g.smoothness),
        polynomial_degree=degree,
        name=f"{a}*{f.name}+{b}*{g.name}",
    )


def _ridge(
    direction: np.ndarray,
    offset: float,
    scale: float,
    outer: Callable[[int, np.ndarray], np.ndarray],
    name: str,
) -> FnOracle:
    """scale * g(a.x + b) with d^alpha = scale * a^alpha g^(|alpha|)(a.x + b)."""
    a = np.asarray(direction, dtype=float)

    def deriv_fn(alpha: tuple[int, ...], x: np.ndarray) -> np.ndarray:
        u = x @ a + offset
        return scale * np.prod(a ** np.array(alpha)) * outer(sum(alpha), u)

    return FnOracle(
        n=a.size,
        eval_fn=lambda x: scale * outer(0, x @ a + offset),
        deriv_fn=deriv_fn,
        name=name,
    )


def _sin_derivative(m: int, u: np.ndarray) -> np.ndarray:
    return np.sin(u + m * np.pi / 2)


def _cos_derivative(m: int, u: np.ndarray) -> np.ndarray:
    return np.cos(u + m * np.pi / 2)


def _exp_derivative(m: int, u: np.ndarray) -> np.ndarray:
    return np.exp(u)


def gaussian_derivative(alpha: Sequence[int], x: np.ndarray) -> np.ndarray:
    """d^alpha exp(-|x|^2/2) = prod_i (-1)^a_i He_{a_i}(x_i) exp(-x_i^2/2), x of shape (m, n)."""
    out = np.ones(x.shape[0])
    for i, a in enumerate(alpha):
        unit = np.zeros(a + 1)
        unit[a] = 1.0
        out = out * (-1) ** a * hermite_e.hermeval(x[:, i], unit) * np.exp(-0.5 * x[:, i] ** 2)
    return out


def gaussian_bump(n: int, scale: float = 1.0) -> FnOracle:
    """The oracle of scale * exp(-|x|^2/2)."""
    return FnOracle(
        n=n,
        eval_fn=lambda x: scale * np.exp(-0.5 * np.sum(x**2, axis=1)),
        deriv_fn=lambda alpha, x: scale * gaussian_derivative(alpha, x),
        name="gaussian",
    )


_RIDGES = {"sin": _sin_derivative, "cos": _cos_derivative, "exp": _exp_derivative}
KNOWN_FUNCTIONS = ["poly", "monomial", *_RIDGES, "gaussian"]


def build_function(spec: FunctionSpec) -> FnOracle:
    """
    Build an oracle from a registry specification.

    Raises:
        UnknownFunctionError: If the name is not in the registry
    """
    n = spec.n
    if spec.name == "poly":
        d = 0
        while math.comb(n + d, n) < len(spec.coeffs):
            d += 1
        coeffs = list(spec.coeffs) + [0.0] * (math.comb(n + d, n) - len(spec.coeffs))
        return FnOracle.from_poly(Poly(n, d, np.array(coeffs)), name="poly")
    if spec.name == "monomial":
        exps = tuple(spec.exponents or (1,) * n)
        if len(exps) != n:
            raise DimensionMismatchError(n, len(exps), field="exponents")
        P = Poly.from_terms(n, {exps: spec.scale})
        return FnOracle.from_poly(P, name="monomial")
    if spec.name in _RIDGES:
        direction = spec.direction or [1.0] * n
        if len(direction) != n:
            raise DimensionMismatchError(n, len(direction), field="direction")
        return _ridge(direction, spec.offset, spec.scale, _RIDGES[spec.name], spec.name)
    if spec.name == "gaussian":
        return gaussian_bump(n, spec.scale)
    raise UnknownFunctionError(spec.name, KNOWN_FUNCTIONS)
