import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evifuse.nig import (
    InvalidNigParams,
    NigMixture,
    NigParams,
    check,
    confidence,
    expected_sigma2,
    fuse_arrays,
    fuse_many,
    fuse_pair,
    validate,
    variance_mu,
)

finite = st.floats(-1e3, 1e3, allow_nan=False)
positive = st.floats(1e-3, 1e3)
nig = st.builds(NigParams, finite, positive, st.floats(1.001, 1e3), positive)


def rel_close(a, b, tol):
    return abs(a - b) <= tol * max(abs(a), abs(b), 1e-300)


class TestValidate:
    def test_interior_point_is_ok(self):
        assert validate(NigParams(0, 1, 2, 1)) == ()

    @pytest.mark.parametrize("params, field", [
        ((0, 0, 2, 1), "gamma"),
        ((0, 1, 1, 1), "alpha"),
        ((0, 1, 2, 0), "beta"),
        ((math.nan, 1, 2, 1), "delta"),
        ((0, math.inf, 2, 1), "gamma"),
    ])
    def test_names_violated_field(self, params, field):
        assert field in validate(NigParams(*params))

    def test_reports_every_violation(self):
        assert set(validate(NigParams(0, -1, 0.5, -2))) == {"gamma", "alpha", "beta"}

    def test_check_raises(self):
        with pytest.raises(InvalidNigParams, match="alpha"):
            check(NigParams(0, 1, 1, 1))


class TestAccessors:
    @pytest.mark.parametrize("params, expected", [
        ((0, 1, 2, 1), 1.0),
        ((5, 2, 3, 4), 2.0),
        ((0, 1, 11, 1), 0.1),
    ])
    def test_expected_sigma2(self, params, expected):
        assert expected_sigma2(NigParams(*params)) == pytest.approx(expected, rel=1e-15)

    @pytest.mark.parametrize("params, expected", [
        ((0, 1, 2, 1), 1.0),
        ((5, 2, 3, 4), 1.0),
        ((0, 4, 2, 1), 0.25),
    ])
    def test_variance_mu(self, params, expected):
        assert variance_mu(NigParams(*params)) == pytest.approx(expected, rel=1e-15)

    @pytest.mark.parametrize("params, expected", [
        ((0, 2, 3, 1), 7.0),
        ((0, 1, 2, 1), 4.0),
        ((9, 0.5, 1.5, 2), 2.5),
    ])
    def test_confidence(self, params, expected):
        assert confidence(NigParams(*params)) == expected

    @pytest.mark.parametrize("fn", [expected_sigma2, variance_mu, confidence])
    def test_reject_invalid(self, fn):
        with pytest.raises(InvalidNigParams):
            fn(NigParams(0, 1, 1, 1))

    @given(nig)
    def test_variance_times_gamma_is_expected_sigma2(self, p):
        assert rel_close(variance_mu(p) * p.gamma, expected_sigma2(p), 1e-12)


class TestFusePair:
    def test_worked_example(self):
        out = fuse_pair(NigParams(1.0, 2.0, 2.0, 1.0), NigParams(3.0, 1.0, 3.0, 2.0))
        for got, want in zip(out.astuple(), (5 / 3, 3.0, 5.5, 13 / 3)):
            assert rel_close(got, want, 1e-12)

    def test_identical_inputs(self):
        p = NigParams(0.7, 1.3, 2.2, 0.4)
        out = fuse_pair(p, p)
        assert out.delta == pytest.approx(p.delta, rel=1e-15)
        assert (out.gamma, out.alpha) == (2 * p.gamma, 2 * p.alpha + 0.5)
        assert out.beta == pytest.approx(2 * p.beta, rel=1e-15)

    def test_high_gamma_dominates_location(self):
        out = fuse_pair(NigParams(0.0, 10.0, 2.0, 1.0), NigParams(100.0, 0.001, 2.0, 1.0))
        assert out.delta == pytest.approx(0.1 / 10.001, rel=1e-12)
        assert out.delta == pytest.approx(0.0100, abs=5e-5)

    def test_rejects_invalid_input(self):
        with pytest.raises(InvalidNigParams):
            fuse_pair(NigParams(0, 1, 2, 1), NigParams(0, 0, 2, 1))

    def test_rejects_overflowing_result(self):
        with pytest.raises(InvalidNigParams):
            fuse_pair(NigParams(-1e200, 1e200, 2, 1), NigParams(1e200, 1e200, 2, 1))

    @given(nig, nig)
    def test_commutative(self, p, q):
        a, b = fuse_pair(p, q), fuse_pair(q, p)
        for x, y in zip(a.astuple(), b.astuple()):
            assert rel_close(x, y, 1e-12) or abs(x - y) < 1e-12

    @given(nig, nig)
    def test_gamma_additive_and_closed(self, p, q):
        out = fuse_pair(p, q)
        assert out.gamma == p.gamma + q.gamma
        assert validate(out) == ()

    @given(nig, nig)
    def test_convex_location_and_confidence_growth(self, p, q):
        out = fuse_pair(p, q)
        lo, hi = min(p.delta, q.delta), max(p.delta, q.delta)
        slack = 1e-12 * max(abs(lo), abs(hi), 1.0)
        assert lo - slack <= out.delta <= hi + slack
        assert confidence(out) > max(confidence(p), confidence(q))


class TestFuseMany:
    def test_single_component_identity(self):
        p = NigParams(1, 2, 3, 4)
        assert fuse_many([p]) is p

    def test_two_components(self):
        p, q = NigParams(1, 2, 2, 1), NigParams(3, 1, 3, 2)
        assert fuse_many(NigMixture([p, q])) == fuse_pair(p, q)

    def test_order_independent(self):
        comps = [NigParams(1, 2, 2, 1), NigParams(3, 1, 3, 2), NigParams(2, 1, 2, 1)]
        ref = fuse_many(comps).astuple()
        for perm in itertools.permutations(comps):
            for x, y in zip(fuse_many(list(perm)).astuple(), ref):
                assert rel_close(x, y, 1e-12)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            fuse_many([])
        with pytest.raises(ValueError):
            NigMixture([])

    @settings(max_examples=50)
    @given(nig, nig, nig)
    def test_associative(self, p, q, r):
        left = fuse_pair(fuse_pair(p, q), r)
        right = fuse_pair(p, fuse_pair(q, r))
        for x, y in zip(left.astuple(), right.astuple()):
            assert rel_close(x, y, 1e-9) or abs(x - y) < 1e-9


def test_fuse_arrays_matches_scalar():
    rng = np.random.default_rng(0)
    d1, d2 = rng.normal(size=(2, 50))
    g1, g2, b1, b2 = rng.uniform(0.1, 3, size=(4, 50))
    a1, a2 = rng.uniform(1.1, 4, size=(2, 50))
    out = fuse_arrays(d1, g1, a1, b1, d2, g2, a2, b2)
    for k in range(50):
        want = fuse_pair(NigParams(d1[k], g1[k], a1[k], b1[k]), NigParams(d2[k], g2[k], a2[k], b2[k]))
        assert np.allclose([o[k] for o in out], want.astuple(), rtol=1e-14, atol=0)
