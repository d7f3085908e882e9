"""Unit tests for multi-indices, polynomials and symmetric forms."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multijet.core.polycore import (
    MultiIndex,
    Poly,
    SymForm,
    basis_size,
    monomial_exponents,
    multinomial_weights,
    shifted_identity,
    shifted_power,
    symform_apply,
    taylor_poly,
)
from multijet.exceptions import DimensionMismatchError, MissingJetDataError, ValidationError

coefficient = st.floats(min_value=-3, max_value=3, allow_nan=False)


class TestMultiIndex:
    """Tests for exponent vectors."""

    def test_length_and_factorial(self):
        """Test |alpha| and alpha!."""
        alpha = MultiIndex((2, 0, 3))
        assert alpha.length == 5
        assert alpha.factorial == 12

    def test_negative_entry_rejected(self):
        """Test that negative exponents raise a validation error."""
        with pytest.raises(ValidationError):
            MultiIndex((1, -1))

    def test_addition_checks_dimension(self):
        """Test that adding multi-indices of different lengths fails."""
        with pytest.raises(DimensionMismatchError):
            MultiIndex((1,)) + MultiIndex((1, 0))

    def test_partial_order(self):
        """Test the componentwise order."""
        assert MultiIndex((1, 0)) <= MultiIndex((1, 2))
        assert not MultiIndex((2, 0)) <= MultiIndex((1, 2))


class TestMonomialBasis:
    """Tests for the graded-lex basis."""

    def test_graded_lex_order_n2(self):
        """Test 1, X1, X2, X1^2, X1X2, X2^2."""
        expected = [[0, 0], [1, 0], [0, 1], [2, 0], [1, 1], [0, 2]]
        assert monomial_exponents(2, 2).tolist() == expected

    @pytest.mark.parametrize("n,d", [(1, 0), (1, 5), (2, 3), (3, 4)])
    def test_size_is_binomial(self, n, d):
        """Test dim R_d[X] = C(n+d, n)."""
        assert len(monomial_exponents(n, d)) == basis_size(n, d) == math.comb(n + d, n)

    def test_multinomial_weights(self):
        """Test k!/alpha! in graded-lex order."""
        assert multinomial_weights(2, 2).tolist() == [1.0, 2.0, 1.0]


class TestPoly:
    """Tests for dense polynomials."""

    def test_evaluate(self):
        """Test evaluation of X1^2 + 3 X2 at (2, 1)."""
        P = Poly.from_terms(2, {(2, 0): 1.0, (0, 1): 3.0})
        assert P.evaluate(np.array([2.0, 1.0])) == pytest.approx(7.0)

    def test_evaluate_batch(self):
        """Test evaluation at several points at once."""
        P = Poly.from_terms(1, {(1,): 2.0, (0,): 1.0})
        np.testing.assert_allclose(P.evaluate(np.array([[0.0], [1.0], [2.0]])), [1, 3, 5])

    def test_derivative(self):
        """Test d/dX1 of X1^2 X2 is 2 X1 X2."""
        P = Poly.from_terms(2, {(2, 1): 1.0})
        assert P.derivative((1, 0)).terms() == {(1, 1): 2.0}

    def test_derivative_beyond_degree_is_zero(self):
        """Test that differentiating past the degree gives zero."""
        P = Poly.from_terms(1, {(2,): 1.0})
        assert P.derivative((3,)).terms() == {}

    def test_product(self):
        """Test (X1 + 1)(X1 - 1) = X1^2 - 1."""
        x = Poly.variable(1, 0)
        one = Poly.constant(1, 1.0)
        assert ((x + one) * (x - one)).terms() == {(0,): -1.0, (2,): 1.0}

    def test_with_degree_refuses_truncation(self):
        """Test that lowering the bound below the degree fails."""
        P = Poly.from_terms(1, {(3,): 1.0})
        with pytest.raises(ValidationError):
            P.with_degree(2)

    def test_coefficient_shape_checked(self):
        """Test that a wrong coefficient count raises."""
        with pytest.raises(DimensionMismatchError):
            Poly(2, 1, np.zeros(4))

    def test_actual_degree(self):
        """Test that degree ignores trailing zero coefficients."""
        assert Poly.from_terms(2, {(1, 0): 1.0}, d=4).degree == 1

    @settings(max_examples=30, deadline=None)
    @given(st.lists(coefficient, min_size=6, max_size=6), st.tuples(coefficient, coefficient))
    def test_taylor_reproduces_polynomial(self, coeffs, x):
        """Test that the full Taylor polynomial of P at any point is P."""
        P = Poly(2, 2, np.array(coeffs))
        point = np.array(x)
        assert taylor_poly(P.jet(point, 2), point, 2).allclose(P, atol=1e-9)

    def test_taylor_needs_full_jet(self):
        """Test that a missing jet entry raises."""
        with pytest.raises(MissingJetDataError):
            taylor_poly({(0,): 1.0}, np.array([0.0]), 1)

    def test_shifted_power(self):
        """Test (X - 1)^2 = X^2 - 2X + 1."""
        assert shifted_power(np.array([1.0]), (2,)).terms() == {(0,): 1.0, (1,): -2.0, (2,): 1.0}


class TestSymForm:
    """Tests for symmetric multilinear forms."""

    def test_coefficient_count(self):
        """Test that an order-k form on R^n has C(n+k-1, k) coefficients."""
        with pytest.raises(DimensionMismatchError):
            SymForm(2, 2, np.zeros(4))

    def test_scalar_value(self):
        """Test the order-0 value accessor."""
        assert SymForm.scalar(3, 2.5).value == 2.5
        with pytest.raises(ValidationError):
            SymForm(1, 1, np.array([1.0])).value

    def test_tensor_roundtrip(self):
        """Test that orbit representatives of the tensor give back the form."""
        S = SymForm(2, 3, np.array([1.0, -2.0, 0.5, 4.0]))
        assert SymForm.from_tensor(S.tensor()).allclose(S)

    @settings(max_examples=30, deadline=None)
    @given(
        st.lists(coefficient, min_size=4, max_size=4),
        st.lists(coefficient, min_size=2, max_size=2),
    )
    def test_homogeneous_matches_multilinear(self, coeffs, v):
        """Test S(v, v, v) via the multinomial formula and via the tensor."""
        S = SymForm(2, 3, np.array(coeffs))
        vec = np.array(v)
        assert S.homogeneous(vec) == pytest.approx(S(vec, vec, vec), abs=1e-9)

    def test_wrong_arity(self):
        """Test that a form applied to the wrong number of vectors raises."""
        with pytest.raises(ValidationError):
            SymForm(1, 2, np.array([1.0]))(np.array([1.0]))

    @pytest.mark.parametrize("k", [2, 5])
    def test_apply_to_shifted_identity(self, k):
        """Test S(X - x, ..., X - x) evaluated at y equals S(y - x, ..., y - x)."""
        rng = np.random.default_rng(k)
        S = SymForm(2, k, rng.normal(size=k + 1))
        x, y = rng.normal(size=2), rng.normal(size=2)
        P = symform_apply(S, [shifted_identity(2, x)] * k)
        assert P.evaluate(y) == pytest.approx(S.homogeneous(y - x), rel=1e-9, abs=1e-9)

    def test_apply_accepts_affine_polynomials(self):
        """Test that polynomial arguments of degree one are accepted."""
        S = SymForm(1, 1, np.array([3.0]))
        P = symform_apply(S, [[Poly.variable(1, 0)]])
        assert P.terms() == {(1,): 3.0}

    def test_apply_rejects_quadratic_arguments(self):
        """Test that non-affine arguments raise."""
        S = SymForm(1, 1, np.array([1.0]))
        with pytest.raises(ValidationError):
            symform_apply(S, [[Poly.from_terms(1, {(2,): 1.0})]])
