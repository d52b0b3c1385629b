"""Flat derivations: bracket, exp/log, the derivation-level variation,
difference operators, and normal forms."""

import gmpy2
import pytest

from dulac.derivations import (NilpotentDerivation, apply_exp_operator,
                               basis_polynomial, bracket, conj_derivation,
                               conj_tau, delta, derivation_close,
                               derivation_from_json, derivation_to_json,
                               exp_derivation, is_unramified_derivation,
                               log_series, lvar, lvar_inverse,
                               normal_form_mildly_ramified,
                               normal_form_unramified, solve_delta,
                               solve_twisted_delta)
from dulac.errors import NotTangent, NotUnramified, ZeroDerivation
from dulac.poly import Poly
from dulac.randomgen import rng_from_seed
from dulac.series import DulacSeries, compose, gconj, invert, series_close, variation

TOL = gmpy2.mpfr("1e-36")


def _rand_derivation(rng, validity=5, integer=False):
    step = 1 if integer else 0.5
    terms = []
    lam = step
    while lam <= validity:
        if rng.random() < 0.5:
            deg = 0 if integer else rng.randint(0, 1)
            terms.append((lam, Poly([gmpy2.mpc(rng.uniform(-0.3, 0.3),
                                               rng.uniform(-0.3, 0.3))
                                     for _ in range(deg + 1)])))
        lam += step
    return NilpotentDerivation(terms, validity)


def test_bracket_antisymmetric_and_flatness_additive():
    rng = rng_from_seed(21)
    X, Y = _rand_derivation(rng), _rand_derivation(rng)
    assert derivation_close(bracket(X, Y), -bracket(Y, X), TOL)
    if not bracket(X, Y).is_zero():
        assert bracket(X, Y).flatness() >= X.flatness() + Y.flatness() - 1e-30


def test_bracket_jacobi():
    rng = rng_from_seed(22)
    X, Y, Z = (_rand_derivation(rng, 4) for _ in range(3))
    s = (bracket(X, bracket(Y, Z)) + bracket(Y, bracket(Z, X))
         + bracket(Z, bracket(X, Y)))
    assert s.is_zero(1e-34)


def test_exp_log_roundtrip():
    rng = rng_from_seed(23)
    X = _rand_derivation(rng)
    f = exp_derivation(X)
    assert f.a == 1 and abs(f.b) < 1e-40
    assert derivation_close(log_series(f), X, TOL)


def test_log_rejects_non_tangent():
    with pytest.raises(NotTangent):
        log_series(DulacSeries(2, 0, ((1, (0.1,)),), 5))


def test_exp_is_group_homomorphism_on_commuting_parts():
    # exp(X) ∘ exp(X) = exp(2X)
    rng = rng_from_seed(24)
    X = _rand_derivation(rng)
    f = exp_derivation(X)
    assert series_close(compose(f, f), exp_derivation(X.scale(2)), TOL)


def test_lvar_dual_path():
    """Operator-style lvar agrees with log ∘ variation ∘ exp."""
    rng = rng_from_seed(25)
    for _ in range(3):
        X = _rand_derivation(rng)
        direct = lvar(X)
        via_group = log_series(variation(exp_derivation(X)))
        assert derivation_close(direct, via_group, 1e-34)


def test_conj_tau_consistency():
    rng = rng_from_seed(26)
    X = _rand_derivation(rng)
    from dulac.series import tau
    t = tau(X.validity)
    lhs = exp_derivation(conj_tau(X))
    rhs = gconj(exp_derivation(X), t)
    assert series_close(lhs, rhs, 1e-34)


def test_delta_on_basis_polynomials():
    """ΔP_k = k·P_{k-1} for the binomial-type basis, k <= 8."""
    for k in range(1, 9):
        lhs = delta(basis_polynomial(k))
        rhs = k * basis_polynomial(k - 1)
        assert (lhs - rhs).is_zero(1e-40), k


def test_solve_delta_roundtrip():
    rng = rng_from_seed(27)
    q = Poly([gmpy2.mpc(rng.uniform(-1, 1), rng.uniform(-1, 1))
              for _ in range(4)])
    # Δ has the constants as kernel, so the solvable targets are ΔP
    target = delta(q)
    p = solve_delta(target, constant=0)
    assert (delta(p) - target).is_zero(1e-38)


def test_solve_twisted_delta_roundtrip():
    from dulac.precision import two_pi_i
    rng = rng_from_seed(28)
    q = Poly([gmpy2.mpc(rng.uniform(-1, 1), rng.uniform(-1, 1))
              for _ in range(4)])
    lam = 1.5
    p = solve_twisted_delta(q, lam)
    twisted = p - gmpy2.exp(two_pi_i() * lam) * p.shift(-two_pi_i())
    assert (twisted - q).is_zero(1e-36)


def test_lvar_inverse_section():
    rng = rng_from_seed(29)
    X = _rand_derivation(rng, 4)
    Z = lvar(X)
    Y = lvar_inverse(Z)
    assert derivation_close(lvar(Y), Z, 1e-32)


def test_unramified_derivation_criterion():
    assert is_unramified_derivation(
        NilpotentDerivation(((1, (0.2,)), (3, (0.1,))), 5))
    assert not is_unramified_derivation(
        NilpotentDerivation(((1.5, (0.2,)),), 5))
    assert not is_unramified_derivation(
        NilpotentDerivation(((1, (0.2, 0.1)),), 5))


def test_normal_form_unramified_invariants():
    rng = rng_from_seed(30)
    Z = _rand_derivation(rng, 4, integer=True)
    if Z.is_zero():
        Z = NilpotentDerivation(((1, (0.3,)),), 4)
    g, k, mu, rem = normal_form_unramified(Z)
    assert k >= 1
    # conjugating by a further unramified germ leaves (k, mu) unchanged
    h = DulacSeries(1, 0, ((1, (0.05,)),), 4)
    Z2 = conj_derivation(Z, h)
    _, k2, mu2, _ = normal_form_unramified(Z2)
    assert k2 == k
    assert abs(mu2 - mu) < 1e-25


def test_normal_form_unramified_rejects():
    with pytest.raises(ZeroDerivation):
        normal_form_unramified(NilpotentDerivation((), 5))
    with pytest.raises(NotUnramified):
        normal_form_unramified(NilpotentDerivation(((1.5, (0.2,)),), 5))


def test_normal_form_mildly_ramified_shape():
    # build X with an unramified derivation-level variation by inverting it
    Z = NilpotentDerivation(((1, (0.3,)), (2, (0.1,))), 5)
    X = lvar_inverse(Z)
    g, k, a, b, mu = normal_form_mildly_ramified(X)
    assert k == 1
    Xg = conj_derivation(X, g)
    terms = dict((float(l), p) for l, p in Xg.terms)
    lead = terms[float(k)]
    # leading slot is −(z + a): top coefficient −1
    assert abs(lead[1] + 1) < 1e-30
    assert abs(lead[0] / lead[1] - a) < 1e-30
    nxt = terms.get(float(2 * k), Poly())
    # next slot carries (mu − 1/2) z + b
    assert abs(nxt[1] - (mu - gmpy2.mpfr(0.5))) < 1e-28
    assert abs(nxt[0] - b) < 1e-28


def test_conj_derivation_matches_germ_conjugation():
    rng = rng_from_seed(31)
    X = _rand_derivation(rng, 4)
    g = DulacSeries(1, 0.2, ((1, (0.1,)),), 4)
    lhs = exp_derivation(conj_derivation(X, g))
    rhs = gconj(exp_derivation(X), g)
    assert series_close(lhs, rhs, 1e-32)


def test_json_roundtrip():
    rng = rng_from_seed(32)
    X = _rand_derivation(rng)
    Y = derivation_from_json(derivation_to_json(X))
    assert derivation_close(X, Y, 1e-12)
