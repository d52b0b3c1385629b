"""Loop germs: formal Poincaré maps, Bernoulli equations, the
integrability classifier, and the solvable p:q generator pairs."""

import math

import gmpy2
import pytest

from dulac.diffeo import DiffeoGerm, exp_field, flow_field
from dulac.errors import BadParameters
from dulac.loopclass import (LinearizableSaddle, LoopGermSpec,
                             PoincareDulacSaddle, bernoulli_functional_check,
                             bernoulli_holonomy_numeric, canonical_holonomies,
                             classify_integrability, determination_formal,
                             poincare_formal, solvable_pq_check)
from dulac.series import (DulacSeries, compose, invert, is_unramified,
                          series_close, variation)

LN2 = math.log(2)


def _log2_germ(order=12):
    """R(y) = y/(1 + y·ln 2): coefficients (−ln 2)^m at y^{m+1}."""
    return DiffeoGerm([(-LN2) ** m for m in range(order)], order)


def _mr_example(validity=6):
    u1 = DulacSeries(1, 0, ((1, (0.1,)), (2, (-0.04,))), validity)
    u2 = DulacSeries(1, 0, ((1, (0.07,)), (3, (0.02,))), validity)
    sig = DulacSeries(1.4, 0.3, (), validity)
    return compose(u1, compose(sig, u2))


def test_canonical_holonomies_unramified():
    d0 = _mr_example()
    hS, hO = canonical_holonomies(d0)
    assert is_unramified(hS) and is_unramified(hO)
    # the monodromy relation identifies invert(hO) with variation(d0)
    assert series_close(invert(hO), variation(d0), 1e-30)


def test_determination_formal_variation_invariant():
    d0 = _mr_example()
    hS, hO = canonical_holonomies(d0)
    v0 = variation(d0)
    for n in (-2, -1, 0, 1, 2):
        dn = determination_formal(d0, hS, hO, n)
        assert series_close(variation(dn), v0, 1e-30)


def test_poincare_formal_linear_corner():
    # 1:1 linear corner: d = identity in the covering chart
    d = DulacSeries(1, 0, (), 6)
    R = _log2_germ(6)
    P = poincare_formal(d, R)
    # exp(1/P(y)) = 2·exp(1/y) translates to P = d + log 2 upstairs
    assert abs(P.b - LN2) < 1e-30


def test_bernoulli_functional_identity():
    R = _log2_germ(13)
    alpha, resid = bernoulli_functional_check(R, a=0, b=[1])
    assert abs(alpha - 2) < 1e-25
    assert resid < 1e-25


def test_bernoulli_functional_rejects_degenerate_unit():
    with pytest.raises(BadParameters):
        bernoulli_functional_check(_log2_germ(6), a=0, b=[1], A=(0,))


def test_classifier_linear():
    verdict = classify_integrability(
        LoopGermSpec(LinearizableSaddle(math.sqrt(2)), DiffeoGerm([3], 8)))
    assert verdict.klass == "Linear"


def test_classifier_bernoulli():
    verdict = classify_integrability(
        LoopGermSpec(LinearizableSaddle(1.0), _log2_germ(12)))
    assert verdict.klass == "Bernoulli"
    assert abs(verdict.params["alpha"] - 2) < 1e-6


def test_classifier_poincare_dulac():
    k, nu = 1, gmpy2.mpc(0.3, 0.1)
    R = exp_field(flow_field(k, nu, 8))
    verdict = classify_integrability(
        LoopGermSpec(PoincareDulacSaddle(k=k, mu=0.2), R))
    assert verdict.klass == "PoincareDulac"
    assert abs(verdict.params["nu"] - nu) < 1e-8


def test_classifier_not_integrable():
    # resonant saddle at the symmetric residue with a gluing that does not
    # embed into the model flow
    verdict = classify_integrability(
        LoopGermSpec(PoincareDulacSaddle(k=1, mu=0.5), DiffeoGerm([1, 0.3], 8)))
    assert verdict.klass == "NotIntegrable"


def test_classifier_nonresonant_nonlinear():
    verdict = classify_integrability(
        LoopGermSpec(LinearizableSaddle(math.sqrt(2)), DiffeoGerm([3, 1], 8)))
    assert verdict.klass == "NotIntegrable"


def test_solvable_pq_pairs():
    assert solvable_pq_check(2, 3, 1, 1)
    assert solvable_pq_check(3, 5, 2, 1)
    assert solvable_pq_check(2, 3, 1, 0)
    with pytest.raises(BadParameters):
        solvable_pq_check(2, 4, 1, 1)
    with pytest.raises(BadParameters):
        solvable_pq_check(2, 3, 2, 1)


def test_bernoulli_holonomy_numeric_leading_terms():
    # k=1, a=0, trivial perturbation: holonomy y + 2πi·y² + O(y³)
    R = bernoulli_holonomy_numeric(1, 0.0, -1, 2, [1e-12])
    assert abs(R[1] - 1) < 1e-6
    assert abs(R[2] - 2j * math.pi) < 1e-4
