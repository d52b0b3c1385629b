"""Model conjugation, centralizers, and the rigidity decomposition."""

import gmpy2
import pytest

from dulac.errors import Indifferent, NotUnramified, ResonanceResidual
from dulac.precision import INF, two_pi_i
from dulac.randomgen import (random_hyperbolic, random_super_attracting,
                             rng_from_seed)
from dulac.rigidity import (ModelGerm, ModelKind, centralizer_membership,
                            conjugate_to_model, rigidity_decompose,
                            variation_group_conjugation_check)
from dulac.series import DulacSeries, compose, invert, series_close

TOL = gmpy2.mpfr("1e-30")


def _conjugates(f):
    phi, model = conjugate_to_model(f)
    m = model.to_series(phi.validity)
    resid = compose(invert(phi), compose(f, phi))
    return phi, model, m, resid


def test_super_attracting_hand_example():
    f = DulacSeries(2, 0, ((1, (1,)),), 4)
    phi, model, m, resid = _conjugates(f)
    assert model.kind is ModelKind.SCALING
    assert abs(model.parameter - 2) < TOL
    assert series_close(resid, m, TOL)
    coef = dict((float(l), p) for l, p in phi.terms)
    assert abs(coef[1.0][0] + gmpy2.mpfr(0.5)) < TOL
    assert abs(coef[2.0][0] + gmpy2.mpfr(0.5)) < TOL


def test_hyperbolic_hand_example():
    lam, b, c = gmpy2.mpfr(1.5), gmpy2.mpfr(0.7), gmpy2.mpfr(0.3)
    f = DulacSeries(1, b, ((lam, (c,)),), 4)
    phi, model, m, resid = _conjugates(f)
    assert model.kind is ModelKind.TRANSLATION
    assert abs(model.parameter - b) < TOL
    assert series_close(resid, m, TOL)
    # the conjugator towards the model (inverse direction) carries the
    # closed-form coefficient q = c/(1 − e^{−λb})
    q = c / (1 - gmpy2.exp(-lam * b))
    coef = dict((float(l), p) for l, p in invert(phi).terms)
    assert abs(coef[1.5][0] - q) < TOL


def test_random_model_conjugation():
    rng = rng_from_seed(51)
    for _ in range(5):
        f = random_super_attracting(rng, 4)
        _, _, m, resid = _conjugates(f)
        assert series_close(resid, m, TOL)
        g = random_hyperbolic(rng, 4)
        _, _, m2, resid2 = _conjugates(g)
        assert series_close(resid2, m2, TOL)


def test_repelling_reduced_through_inverse():
    f = DulacSeries(0.5, 0, ((1, (0.2,)),), 4)
    phi, model, m, resid = _conjugates(f)
    assert model.kind is ModelKind.SCALING
    assert abs(model.parameter - 0.5) < TOL
    assert series_close(resid, m, TOL)


def test_indifferent_rejected():
    with pytest.raises(Indifferent):
        conjugate_to_model(DulacSeries(1, two_pi_i(), (), 4))


def test_centralizer_membership():
    scaling = ModelGerm(ModelKind.SCALING, gmpy2.mpfr(2))
    assert centralizer_membership(DulacSeries(3, 0, (), 4), scaling)
    assert not centralizer_membership(DulacSeries(1, 1, (), 4), scaling)
    translation = ModelGerm(ModelKind.TRANSLATION, gmpy2.mpfr(0.7))
    assert centralizer_membership(DulacSeries(1, 0.3, (), 4), translation)
    assert not centralizer_membership(DulacSeries(2, 0, (), 4), translation)


def test_rigidity_decompose_roundtrip():
    f = DulacSeries(2, 0.1, ((1, (0.4,)),), 4)
    phi, model = conjugate_to_model(f)
    # psi = phi composed with a centralizer element of the model
    center = DulacSeries(1.7, 0, (), 4)
    psi = compose(phi, center)
    phi2, c = rigidity_decompose(f, psi)
    assert series_close(phi2, phi, TOL)
    # contract: c = invert(psi) ∘ phi, so psi ∘ c recovers phi
    assert series_close(c, invert(center), TOL)
    assert series_close(compose(psi, c), phi, TOL)


def test_variation_group_conjugation_check():
    f = DulacSeries(1.4, 0.3, ((1.5, (0.2,)),), 5)
    g = DulacSeries(1, 0, ((1, (0.1,)), (2, (0.05,))), 5)
    assert variation_group_conjugation_check(f, g)
    with pytest.raises(NotUnramified):
        variation_group_conjugation_check(f, DulacSeries(1, 0, ((1.5, (0.1,)),), 5))
