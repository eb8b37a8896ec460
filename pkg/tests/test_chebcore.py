import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from gevrey_feq.chebcore import (
    ChebRep, cheb_points, chop, coeff_abs_sum, coeffs_from_csv, coeffs_to_csv, combine,
    constant, differentiate_cheb, eval_cheb, interpolate, sup_norm_interval,
)
from gevrey_feq.errors import ChebDomainError, ResolutionError

SOURCES = {
    "sin": np.sin,
    "cos3x": lambda x: np.cos(3 * x),
    "runge": lambda x: 1 / (1 + 25 * x**2),
    "inv2mx": lambda x: 1 / (2 - x),
    "x^2": lambda x: x**2,
    "exp_sin": lambda x: np.exp(np.sin(2 * x)),
    "odd_poly": lambda x: x**5 - 0.3 * x**3,
}


@pytest.fixture(scope="module")
def sin_rep():
    return interpolate(np.sin)


def T(k):
    return lambda x: np.cos(k * np.arccos(np.clip(x, -1, 1)))


class TestInterpolate:
    def test_square(self):
        rep = interpolate(lambda x: x**2, tol=1e-14)
        assert rep.coeffs == pytest.approx([0.5, 0.0, 0.5], abs=1e-15)

    def test_basis_reproduction(self):
        c = interpolate(T(5)).coeffs
        assert c[5] == pytest.approx(1.0, abs=1e-14)
        assert np.all(np.abs(np.delete(c, 5)) <= 1e-14)

    def test_sin_first_coefficient_matches_quadrature(self, sin_rep):
        # c_1 = (2/pi) * int_0^pi sin(cos t) cos t dt
        nodes, weights = np.polynomial.legendre.leggauss(64)
        t = 0.5 * math.pi * (nodes + 1)
        quad = 0.5 * math.pi * np.sum(weights * np.sin(np.cos(t)) * np.cos(t))
        oracle = 2 * quad / math.pi
        assert oracle == pytest.approx(2 * special.j1(1.0), abs=1e-15)
        assert sin_rep.coeffs[1] == pytest.approx(oracle, abs=1e-14)
        assert sin_rep.coeffs[1] == pytest.approx(0.880101171489867, abs=1e-14)

    def test_sin_is_odd(self, sin_rep):
        assert np.all(np.abs(sin_rep.coeffs[::2]) <= 1e-16)

    @pytest.mark.parametrize("name", sorted(SOURCES))
    def test_reproduces_source(self, name):
        f = SOURCES[name]
        rep = interpolate(f)
        x = np.random.default_rng(7).uniform(-1, 1, 101)
        sup = np.max(np.abs(f(np.linspace(-1, 1, 2001))))
        assert np.max(np.abs(eval_cheb(rep, x) - f(x))) <= 1e-12 * (1 + sup)

    @pytest.mark.parametrize("name", sorted(SOURCES))
    def test_values_at_own_nodes(self, name):
        f = SOURCES[name]
        rep = interpolate(f)
        x = cheb_points(rep.degree)
        vals = f(x)
        assert np.max(np.abs(eval_cheb(rep, x) - vals)) <= 1e-13 * np.max(np.abs(vals))

    def test_resolution_error_carries_envelope(self):
        with pytest.raises(ResolutionError) as info:
            interpolate(lambda x: np.abs(x), max_degree=64)
        assert len(info.value.envelope) > 0

    @pytest.mark.parametrize("bad", [10, 48, 8])
    def test_max_degree_power_of_two(self, bad):
        with pytest.raises(ValueError):
            interpolate(np.sin, max_degree=bad)

    def test_tol_positive(self):
        with pytest.raises(ValueError):
            interpolate(np.sin, tol=0.0)

    def test_points_include_endpoints(self):
        x = cheb_points(16)
        assert x[0] == 1.0 and x[-1] == -1.0 and x[8] == 0.0
        assert np.all(np.diff(x) < 0)


class TestEval:
    def test_constant(self):
        assert eval_cheb(ChebRep(np.array([1.0])), 0.3) == 1.0

    def test_t2(self):
        assert eval_cheb(ChebRep(np.array([0.0, 0.0, 1.0])), 0.5) == pytest.approx(-0.5, abs=1e-16)

    def test_sin_at_one(self, sin_rep):
        assert eval_cheb(sin_rep, 1.0) == pytest.approx(math.sin(1.0), abs=1e-13)

    def test_outside_domain(self, sin_rep):
        with pytest.raises(ChebDomainError):
            eval_cheb(sin_rep, 1.0 + 1e-9)
        with pytest.raises(ChebDomainError):
            eval_cheb(sin_rep, np.array([0.0, -1.5]))

    def test_matches_numpy_chebval(self):
        c = np.random.default_rng(3).normal(size=40)
        x = np.linspace(-1, 1, 33)
        assert np.allclose(eval_cheb(ChebRep(c), x), np.polynomial.chebyshev.chebval(x, c),
                           atol=1e-13)


class TestDifferentiate:
    def test_square(self):
        d = differentiate_cheb(ChebRep(np.array([0.5, 0.0, 0.5])))
        assert d.coeffs == pytest.approx([0.0, 2.0])

    def test_t3_at_one(self):
        d = differentiate_cheb(ChebRep(np.array([0.0, 0.0, 0.0, 1.0])))
        assert eval_cheb(d, 1.0) == pytest.approx(9.0, abs=1e-14)
        assert d.degree == 2

    def test_constant_is_zero(self):
        d = differentiate_cheb(constant(4.2))
        assert np.all(d.coeffs == 0.0)
        assert eval_cheb(d, 0.4) == 0.0

    @pytest.mark.parametrize("name", ["sin", "cos3x", "inv2mx", "exp_sin"])
    def test_finite_differences(self, name):
        f = SOURCES[name]
        d = differentiate_cheb(interpolate(f))
        x = np.linspace(-0.95, 0.95, 21)
        h = 1e-5
        fd = (f(x + h) - f(x - h)) / (2 * h)
        exact = eval_cheb(d, x)
        assert np.all(np.abs(exact - fd) <= 1e-6 * np.maximum(np.abs(fd), 1e-3))

    def test_matches_numpy_chebder(self):
        c = np.random.default_rng(5).normal(size=20)
        d = differentiate_cheb(ChebRep(c, tol=1e-300))
        assert np.allclose(d.coeffs, np.polynomial.chebyshev.chebder(c), atol=1e-12)


coeff_vectors = st.lists(st.floats(-10, 10), min_size=1, max_size=30).map(np.array)


class TestCombine:
    def test_cancels(self, sin_rep):
        z = combine(1.0, sin_rep, -1.0, sin_rep)
        assert np.all(z.coeffs == 0.0)

    def test_pads(self):
        r = combine(2.0, ChebRep(np.array([1.0])), 3.0, ChebRep(np.array([0.0, 1.0])))
        assert r.coeffs == pytest.approx([2.0, 3.0])

    def test_square_plus_one(self):
        r = combine(1.0, interpolate(lambda x: x**2), 1.0, constant(1.0))
        assert eval_cheb(r, 1.0) == pytest.approx(2.0, abs=1e-15)

    @settings(max_examples=60, deadline=None)
    @given(coeff_vectors, coeff_vectors, st.floats(-5, 5), st.floats(-5, 5))
    def test_linear(self, cf, cg, alpha, beta):
        f, g = ChebRep(cf), ChebRep(cg)
        x = np.linspace(-1, 1, 25)
        r = combine(alpha, f, beta, g)
        scale = 1 + abs(alpha) * coeff_abs_sum(f) + abs(beta) * coeff_abs_sum(g)
        assert np.max(np.abs(eval_cheb(r, x) - alpha * eval_cheb(f, x) - beta * eval_cheb(g, x))) \
            <= 1e-14 * scale * 10


class TestSupNorm:
    def test_t3(self):
        assert sup_norm_interval(ChebRep(np.array([0.0, 0.0, 0.0, 1.0]))) == pytest.approx(1.0)

    def test_square_plus_one(self):
        assert sup_norm_interval(ChebRep(np.array([1.5, 0.0, 0.5]))) == pytest.approx(2.0)

    def test_half_sin(self, sin_rep):
        r = combine(0.5, sin_rep, 0.0, sin_rep)
        assert sup_norm_interval(r) == pytest.approx(0.4207354924, abs=1e-10)

    @settings(max_examples=80, deadline=None)
    @given(coeff_vectors)
    def test_below_coefficient_sum(self, c):
        rep = ChebRep(c)
        assert sup_norm_interval(rep) <= coeff_abs_sum(rep)


class TestChop:
    def test_tiny_tail(self):
        assert chop(np.array([1.0, 1e-20, 1e-20]), 1e-14).coeffs.tolist() == [1.0]

    def test_all_zero(self):
        assert chop(np.zeros(5), 1e-14).coeffs.tolist() == [0.0]

    def test_keeps_above_threshold(self):
        assert chop(np.array([1.0, 0.5, 1e-10, 1e-16]), 1e-14).coeffs.tolist() == [1.0, 0.5, 1e-10]

    def test_tol_positive(self):
        with pytest.raises(ValueError):
            chop(np.array([1.0]), 0.0)


class TestCsv:
    @pytest.mark.parametrize("hexfloat", [False, True])
    def test_round_trip_bitwise(self, sin_rep, hexfloat):
        text = coeffs_to_csv(sin_rep, hexfloat=hexfloat)
        assert text.splitlines()[0] == "index,coefficient"
        back = coeffs_from_csv(text)
        assert back.tobytes() == sin_rep.coeffs.tobytes()

    def test_decimal_has_17_digits(self):
        line = coeffs_to_csv(ChebRep(np.array([1 / 3]))).splitlines()[1]
        assert line == "0,0.33333333333333331"

    @pytest.mark.parametrize("text,line", [
        ("index,coefficient\n0,1.0\n1,abc\n", 3),
        ("index,coefficient\n0,1.0\n2,1.0\n", 3),
        ("index,coefficient\n0\n", 2),
    ])
    def test_malformed_reports_line(self, text, line):
        with pytest.raises(ValueError, match=f"line {line}"):
            coeffs_from_csv(text)


class TestRep:
    def test_immutable(self, sin_rep):
        with pytest.raises(ValueError):
            sin_rep.coeffs[0] = 1.0

    def test_equality(self):
        assert ChebRep(np.array([1.0, 2.0])) == ChebRep(np.array([1.0, 2.0]))
        assert ChebRep(np.array([1.0, 2.0])) != ChebRep(np.array([1.0, 3.0]))
