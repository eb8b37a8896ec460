import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gevrey_feq.errors import InvalidMapError
from gevrey_feq.funexpr import parse_expr
from gevrey_feq.stripgeo import (
    CERTIFICATE_KIND, StripDomain, check_Ek, check_real_range, dist_to_interval,
    estimate_lambda, nesting_ratio_bound, sample_strip_boundary, strip_radius, strip_sup_norm,
)

SIN = parse_expr("sin(x)")
IDENTITY = parse_expr("x")
SQUARE = parse_expr("x^2")
HOLOMORPHIC = ["sin(x)", "cos(x)", "x", "x^2 + 1", "0.5", "iter_scaled(sin, 3)",
               "cos(-x)/4", "sin(sin(x - 1/2))"]


def sin_modulus_on_stadium(r, samples=200_000):
    """Max of |sin| on the stadium boundary from |sin(x+iy)|^2 = sin^2 x + sinh^2 y."""
    t = np.linspace(-0.5 * math.pi, 0.5 * math.pi, samples)
    cap_x, cap_y = 1 + r * np.cos(t), r * np.sin(t)
    edge_x = np.linspace(-1, 1, samples)
    sq = np.concatenate([np.sin(cap_x) ** 2 + np.sinh(cap_y) ** 2,
                         np.sin(edge_x) ** 2 + np.sinh(r) ** 2])
    return float(np.sqrt(sq.max()))


class TestDistance:
    @pytest.mark.parametrize("z,d", [(2, 1.0), (0.5j, 0.5), (-1.3 + 0.4j, 0.5), (0.2, 0.0)])
    def test_closed_form(self, z, d):
        assert dist_to_interval(z) == pytest.approx(d, abs=1e-15)

    def test_lipschitz(self):
        rng = np.random.default_rng(11)
        z1 = rng.uniform(-3, 3, 1000) + 1j * rng.uniform(-2, 2, 1000)
        z2 = rng.uniform(-3, 3, 1000) + 1j * rng.uniform(-2, 2, 1000)
        assert np.all(np.abs(dist_to_interval(z1) - dist_to_interval(z2))
                      <= np.abs(z1 - z2) + 1e-15)


class TestRadius:
    def test_values(self):
        assert strip_radius(1, 0.2, 4) == pytest.approx(0.05)
        assert strip_radius(2, 0.4, 16) == pytest.approx(0.1)
        assert strip_radius(3.7, 0.3, 1) == 0.3

    @settings(max_examples=50, deadline=None)
    @given(st.floats(0.1, 5), st.floats(0.01, 2), st.integers(1, 500))
    def test_strictly_decreasing(self, k, A, n):
        assert strip_radius(k, A, n + 1) < strip_radius(k, A, n)

    def test_membership(self):
        d = StripDomain(1, 0.2, 2)
        assert d.contains(0.09j) and not d.contains(0.11j) and d.contains(1.05)

    @pytest.mark.parametrize("args", [(0, 1, 1), (1, 0, 1), (1, 1, 0)])
    def test_rejects(self, args):
        with pytest.raises(ValueError):
            strip_radius(*args)


class TestBoundary:
    @pytest.mark.parametrize("m", [8, 100, 2000])
    def test_on_boundary(self, m):
        r = 0.17
        z = sample_strip_boundary(StripDomain(1, r, 1), m)
        assert len(z) == m
        assert np.all(np.abs(dist_to_interval(z) - r) <= 1e-12)

    def test_eight_point_anchors(self):
        r = 0.3
        z = sample_strip_boundary(r, 8)
        for target in (1 + r, 1j * r, -(1 + r), -1j * r):
            assert np.min(np.abs(z - target)) <= 1e-12

    def test_uniform_arclength(self):
        r, m = 0.25, 400
        z = sample_strip_boundary(r, m)
        total = 4 + 2 * math.pi * r
        chords = np.abs(np.diff(np.append(z, z[0])))
        assert np.all(chords <= total / m + 1e-12)
        assert np.sum(chords) == pytest.approx(total, rel=1e-4)

    def test_deterministic(self):
        assert sample_strip_boundary(0.2, 64).tobytes() == sample_strip_boundary(0.2, 64).tobytes()

    def test_too_few(self):
        with pytest.raises(ValueError):
            sample_strip_boundary(0.2, 7)


class TestStripSup:
    def test_constant(self):
        assert strip_sup_norm(parse_expr("0.5"), 0.37) == 0.5

    def test_identity(self):
        assert strip_sup_norm(IDENTITY, 0.1) == pytest.approx(1.1, abs=1e-15)

    def test_sin_against_modulus_oracle(self):
        oracle = sin_modulus_on_stadium(0.3)
        assert oracle == pytest.approx(0.96409, abs=1e-5)
        sampled = strip_sup_norm(SIN, 0.3, 4096)
        assert sampled <= oracle + 1e-14
        assert sampled >= oracle - 1e-6

    @pytest.mark.parametrize("src", HOLOMORPHIC)
    def test_monotone_in_radius(self, src):
        f = parse_expr(src)
        vals = [strip_sup_norm(f, r, 2000) for r in (0.1, 0.2, 0.3)]
        assert vals[0] <= vals[1] <= vals[2]

    @pytest.mark.parametrize("src", HOLOMORPHIC)
    def test_monotone_in_samples(self, src):
        # doubling keeps every earlier sample, so the max cannot drop
        f = parse_expr(src)
        vals = [strip_sup_norm(f, 0.2, m) for m in (500, 1000, 2000, 4000)]
        assert all(a <= b for a, b in zip(vals, vals[1:]))

    def test_minimum_samples(self):
        with pytest.raises(ValueError):
            strip_sup_norm(SIN, 0.2, 32)


class TestRealRange:
    def test_sin_ok(self):
        check_real_range([SIN, IDENTITY, parse_expr("iter_scaled(sin, 4)")])

    def test_witness(self):
        with pytest.raises(InvalidMapError) as info:
            check_real_range([SIN, parse_expr("2*x")])
        assert info.value.index == 1
        assert abs(2 * info.value.witness) > 1


@pytest.fixture(scope="module")
def sin_certs():
    return {A: check_Ek([SIN], 1, A, 1, 50, 2000) for A in (0.1, 0.2, 0.4)}


class TestEk:
    @pytest.mark.parametrize("A", [0.1, 0.2, 0.4])
    def test_sin_passes_within_analytic_bound(self, sin_certs, A):
        cert = sin_certs[A]
        assert cert.passed and cert.M_A == 1 and cert.violations == []
        for n, ratio in enumerate(cert.ratios, start=1):
            assert ratio <= nesting_ratio_bound(A, n) + 1e-12
        assert cert.max_ratio < 1 - 1e-9
        assert cert.kind == CERTIFICATE_KIND

    @pytest.mark.parametrize("k,A", [(1, 0.2), (2, 0.4), (0.5, 0.1), (3, 1.0)])
    def test_identity_ratio_closed_form(self, k, A):
        cert = check_Ek([IDENTITY], k, A, 1, 20, 256)
        assert cert.passed
        expected = [(n / (n + 1)) ** (1 / k) for n in range(1, 21)]
        assert cert.ratios == pytest.approx(expected, rel=1e-12)

    def test_square_fails_with_corner_witness(self):
        cert = check_Ek([SQUARE], 1, 0.2, 2, 10, 2000)
        assert not cert.passed and cert.M_A is None
        p, n, re, im, dist, need = cert.violations[0]
        assert p == 0 and 2 <= n <= 10 and dist >= need
        # the image of the corner 1 + ir lies about 2r off the interval
        r = strip_radius(1, 0.2, n + 1)
        corner = dist_to_interval((1 + 1j * r) ** 2)
        assert corner == pytest.approx(2 * r, rel=0.05) and corner > need

    def test_witness_order_and_serialization(self):
        cert = check_Ek([IDENTITY, SQUARE], 1, 0.2, 1, 5, 64)
        keys = [(v[0], v[1]) for v in cert.violations]
        assert keys == sorted(keys)
        d = cert.to_dict()
        assert d["pass"] is False and len(d["violations"][0]) == 6

    def test_contractive_polynomial(self):
        cert = check_Ek([parse_expr("x/2 + x^2/4")], 1, 0.2, 1, 30, 256)
        assert cert.passed and cert.M_A == 1

    def test_real_range_precondition(self):
        with pytest.raises(InvalidMapError):
            check_Ek([parse_expr("1.5*x")], 1, 0.2)


class TestLambda:
    def test_sin(self):
        rep = estimate_lambda(SIN, 10)
        assert rep.lambda_hat == pytest.approx(1.0, abs=1e-9)
        assert rep.argmax == 1 and not rep.sup_possibly_not_attained

    def test_linear(self):
        rep = estimate_lambda(parse_expr("0.5*x"))
        assert rep.lambda_hat == 0.5
        assert rep.values[1:] == [0.0] * 24

    @pytest.mark.parametrize("m", [1, 2, 3, 4])
    def test_scaled_iterates(self, m):
        rep = estimate_lambda(parse_expr(f"iter_scaled(sin, {m})"))
        assert rep.lambda_hat <= 1 + 1e-9
        assert rep.lambda_hat == pytest.approx(2.0 ** -(m - 1), abs=1e-12)

    def test_invariants(self):
        rep = estimate_lambda(parse_expr("sin(sin(x/2))"), 12)
        assert rep.lambda_hat <= 1
        assert all(np.isfinite(rep.values)) and rep.lambda_hat >= max(rep.values)

    def test_flags_truncated_sup(self):
        # per-n values c^(1/n) * binom(6, n)^(1/n) grow with n for tiny c
        rep = estimate_lambda(parse_expr("x^6/1000000"), 6)
        assert rep.argmax == 6 and rep.sup_possibly_not_attained

    def test_rejects_zero_order(self):
        with pytest.raises(ValueError):
            estimate_lambda(SIN, 0)
