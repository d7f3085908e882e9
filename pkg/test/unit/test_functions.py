"""Unit tests for function oracles and the built-in registry."""

import math

import numpy as np
import pytest

from multijet.core.functions import (
    FnOracle,
    build_function,
    gaussian_bump,
    oracle_sum,
)
from multijet.core.polycore import Poly
from multijet.exceptions import DimensionMismatchError, SmoothnessError, UnknownFunctionError
from multijet.types import FunctionSpec


class TestRegistry:
    """Tests for build_function."""

    def test_sin_derivatives(self):
        """Test that d^m sin(x) cycles through cos, -sin, -cos."""
        f = build_function(FunctionSpec(name="sin"))
        x = np.array([0.7])
        assert f(x) == pytest.approx(math.sin(0.7))
        assert f.deriv((1,), x) == pytest.approx(math.cos(0.7))
        assert f.deriv((2,), x) == pytest.approx(-math.sin(0.7))
        assert f.deriv((3,), x) == pytest.approx(-math.cos(0.7))

    def test_ridge_chain_rule(self):
        """Test d^alpha exp(a.x + b) = a^alpha exp(a.x + b)."""
        f = build_function(FunctionSpec(name="exp", n=2, direction=[2.0, -1.0], offset=0.5))
        x = np.array([0.1, 0.3])
        value = math.exp(0.2 - 0.3 + 0.5)
        assert f.deriv((2, 1), x) == pytest.approx(4.0 * -1.0 * value)

    def test_poly_pads_coefficients(self):
        """Test that a short graded-lex coefficient list is padded."""
        f = build_function(FunctionSpec(name="poly", n=2, coeffs=[1.0, 2.0]))
        assert f.polynomial_degree == 1
        assert f(np.array([3.0, 5.0])) == pytest.approx(7.0)

    def test_monomial(self):
        """Test the monomial X1^2 X2 with a scale."""
        f = build_function(FunctionSpec(name="monomial", n=2, exponents=[2, 1], scale=3.0))
        assert f(np.array([2.0, 0.5])) == pytest.approx(6.0)

    def test_gaussian_gradient(self):
        """Test d/dx1 exp(-|x|^2/2) = -x1 exp(-|x|^2/2)."""
        f = gaussian_bump(2)
        x = np.array([0.4, -1.2])
        expected = -0.4 * math.exp(-0.5 * (0.16 + 1.44))
        assert f.deriv((1, 0), x) == pytest.approx(expected)

    def test_gaussian_second_derivative(self):
        """Test d^2/dx^2 exp(-x^2/2) = (x^2 - 1) exp(-x^2/2)."""
        f = build_function(FunctionSpec(name="gaussian"))
        assert f.deriv((2,), np.array([1.5])) == pytest.approx(1.25 * math.exp(-1.125))

    def test_unknown_function(self):
        """Test that unknown names raise with the known list."""
        with pytest.raises(UnknownFunctionError):
            build_function(FunctionSpec(name="tan"))

    def test_direction_dimension_checked(self):
        """Test that a direction of the wrong length raises."""
        with pytest.raises(DimensionMismatchError):
            build_function(FunctionSpec(name="cos", n=2, direction=[1.0]))


class TestFnOracle:
    """Tests for oracle behaviour."""

    def test_smoothness_enforced(self):
        """Test that asking for too many derivatives raises."""
        f = FnOracle(
            n=1,
            eval_fn=lambda x: np.abs(x[:, 0]) ** 3,
            deriv_fn=lambda alpha, x: 3 * x[:, 0] * np.abs(x[:, 0]),
            smoothness=1,
        )
        f.deriv((1,), np.array([0.5]))
        with pytest.raises(SmoothnessError):
            f.deriv((2,), np.array([0.5]))

    def test_dimension_checked(self):
        """Test that points of the wrong dimension raise."""
        f = gaussian_bump(2)
        with pytest.raises(DimensionMismatchError):
            f(np.array([1.0, 2.0, 3.0]))

    def test_differential_shape(self):
        """Test D^2 f of a function on R^3 at two points."""
        f = gaussian_bump(3)
        D2 = f.differential(2, np.zeros((2, 3)))
        assert D2.shape == (2, 6)
        np.testing.assert_allclose(D2[0], [-1, 0, 0, -1, 0, -1])

    def test_from_poly(self):
        """Test exact derivatives of a polynomial oracle."""
        P = Poly.from_terms(1, {(3,): 1.0})
        f = FnOracle.from_poly(P)
        assert f.polynomial_degree == 3
        assert f.deriv((2,), np.array([2.0])) == pytest.approx(12.0)

    def test_oracle_sum_linearity(self):
        """Test that a*f + b*g has derivatives a*f' + b*g'."""
        f = build_function(FunctionSpec(name="sin"))
        g = build_function(FunctionSpec(name="exp"))
        h = oracle_sum(f, g, 2.0, -3.0)
        x = np.array([0.2])
        assert h.deriv((1,), x) == pytest.approx(2 * math.cos(0.2) - 3 * math.exp(0.2))
        assert h.polynomial_degree is None
