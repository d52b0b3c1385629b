"""Core series ring: composition, inversion, group words, classification."""

import gmpy2
import pytest

from dulac.errors import NotMildlyRamified
from dulac.precision import INF, set_precision, two_pi_i
from dulac.randomgen import random_series, random_unramified, rng_from_seed
from dulac.series import (Classification, DulacSeries, DynType, classify,
                          compose, gcomm, gconj, gmul, invert, is_mildly_ramified,
                          is_unramified, series_close, series_from_json,
                          series_to_json, tau, variation)

TOL = gmpy2.mpfr("1e-36")


def _rand(rng, validity=5):
    f = random_series(rng, validity, max_degree=1, density=0.4)
    return DulacSeries(rng.choice([0.5, 1, 2]), f.b, f.terms, f.validity)


def test_compose_identity_neutral():
    rng = rng_from_seed(3)
    f = _rand(rng)
    e = DulacSeries.identity(f.validity)
    assert series_close(compose(f, e), f, TOL)
    assert series_close(compose(e, f), f, TOL)


def test_compose_associative():
    rng = rng_from_seed(4)
    f, g, h = _rand(rng), _rand(rng), _rand(rng)
    assert series_close(compose(compose(f, g), h), compose(f, compose(g, h)), TOL)


def test_invert_roundtrip():
    rng = rng_from_seed(5)
    for _ in range(5):
        f = _rand(rng)
        g = invert(f)
        assert compose(f, g).is_identity(TOL)
        assert compose(g, f).is_identity(TOL)


def test_multiplier_multiplicative():
    rng = rng_from_seed(6)
    f, g = _rand(rng), _rand(rng)
    assert compose(f, g).a == f.a * g.a


def test_validity_propagation():
    rng = rng_from_seed(7)
    f, g = _rand(rng), _rand(rng)
    assert compose(f, g).validity == min(g.validity, g.a * f.validity)
    assert invert(f).validity == f.validity / f.a


def test_gmul_gconj_gcomm_are_pipeline_words():
    rng = rng_from_seed(8)
    x, y = _rand(rng), _rand(rng)
    assert series_close(gmul(x, y), compose(y, x), TOL)
    yi = invert(y)
    assert series_close(gconj(x, y), compose(y, compose(x, yi)), TOL)
    xi = invert(x)
    assert series_close(gcomm(x, y),
                        compose(y, compose(x, compose(yi, xi))), TOL)


def test_variation_of_unramified_is_identity():
    rng = rng_from_seed(9)
    u = random_unramified(rng, 5)
    assert variation(u).is_identity(TOL)


def test_variation_detects_ramification():
    f = DulacSeries(1, 0, ((1.5, (0.2,)),), 5)
    v = variation(f)
    assert not v.is_identity(1e-10)
    # e^{-1.5 z} picks up the phase e^{3πi} = -1 under z -> z + 2πi, so
    # the leading variation term is (1 - e^{2πiλ})·c = 2c for λ = 1.5.
    lead = dict((float(l), p) for l, p in v.terms)[1.5]
    assert abs(lead[0] - gmpy2.mpc(0.4)) < 1e-30


def test_mildly_ramified_and_classification_examples():
    assert classify(DulacSeries(2, 0, (), INF)).kind is DynType.SUPER_ATTRACTING
    assert classify(DulacSeries(1, 1, (), INF)).kind is DynType.HYP_ATTRACTING
    assert classify(DulacSeries(1, two_pi_i(), (), INF)).kind is DynType.INDIFFERENT
    u = DulacSeries(1, 0, ((1, (0.1,)), (2, (-0.04,))), 6)
    sig = DulacSeries(1.4, 0.3, (), 6)
    d0 = compose(u, sig)
    assert is_mildly_ramified(d0)
    assert not is_unramified(d0)


def test_unramified_requires_constant_polynomials():
    # a nonconstant polynomial at an integer exponent is NOT unramified:
    # P(z - 2πi) differs from P(z)
    f = DulacSeries(1, 0, ((1, (0.0, 0.3)),), 5)
    assert not is_unramified(f)
    assert not variation(f).is_identity(1e-10)


def test_boundary_exponent_terms_are_kept():
    """Exponents reached along different arithmetic routes (e.g. 30/7 as
    6·(5/7) versus 3/1.4 + 15/7) differ in the last ulp; composition must
    not drop genuine terms sitting on the validity boundary."""
    u1 = DulacSeries(1, 0, ((1, (0.1,)), (2, (-0.04,))), 6)
    u2 = DulacSeries(1, 0, ((1, (0.07,)), (3, (0.02,))), 6)
    sig = DulacSeries(1.4, 0.3, (), 6)
    d0 = compose(u1, compose(sig, u2))
    i0 = invert(d0)
    assert compose(d0, i0).is_identity(1e-40)
    assert compose(i0, d0).is_identity(1e-40)


def test_infinite_validity_with_flat_terms_rejected():
    f = DulacSeries(1, 0, ((1, (1.0,)),), INF)
    with pytest.raises(ValueError):
        compose(f, f)
    with pytest.raises(ValueError):
        invert(f)


def test_json_roundtrip():
    rng = rng_from_seed(10)
    f = _rand(rng)
    g = series_from_json(series_to_json(f))
    assert series_close(f, g, 1e-12)


def test_precision_changes_tolerance():
    set_precision(30)
    rng = rng_from_seed(11)
    f = _rand(rng)
    g = invert(f)
    assert compose(f, g).is_identity(1e-18)
