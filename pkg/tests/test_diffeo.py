"""One-variable germs at the origin: Lie series, covering projection,
commutation dichotomy, and the Fatou model map."""

import cmath
import math

import gmpy2
import pytest

from dulac.diffeo import (DiffeoGerm, FormalField, GHKind, exp_field,
                          fatou_coordinate, fatou_model_map, flow_field,
                          germ_close, germ_from_json, germ_to_json,
                          gh_dichotomy, infinitesimal_generator, lift_pi,
                          project_pi, variation_pair)
from dulac.errors import NotTangentToIdentity
from dulac.randomgen import rng_from_seed
from dulac.series import DulacSeries, compose, series_close


def _rand_tangent_germ(rng, order=8):
    cs = [1] + [0.3 * rng.uniform(-1, 1) for _ in range(order - 1)]
    return DiffeoGerm(cs, order)


def test_compose_invert_roundtrip():
    rng = rng_from_seed(41)
    F = _rand_tangent_germ(rng)
    assert F.compose(F.invert()).is_identity(1e-38)
    assert F.invert().compose(F).is_identity(1e-38)


def test_exp_field_generator_roundtrip():
    rng = rng_from_seed(42)
    V = FormalField([0] + [0.2 * rng.uniform(-1, 1) for _ in range(7)], 8)
    F = exp_field(V)
    W = infinitesimal_generator(F)
    assert max(abs(a - b) for a, b in zip(V.coeffs, W.coeffs)) < 1e-36


def test_generator_rejects_non_tangent():
    with pytest.raises(NotTangentToIdentity):
        infinitesimal_generator(DiffeoGerm([2], 4))


def test_flow_field_maps_commute():
    k, nu = 1, gmpy2.mpc(0.3, 0.1)
    order = 3 * k + 2
    V = flow_field(k, nu, order)
    G = exp_field(V)
    H = exp_field(V.scale(-1 / nu))
    comm = H.invert().compose(G.invert()).compose(H).compose(G)
    assert comm.is_identity(1e-34)
    verdict = gh_dichotomy(G, H)
    assert verdict.kind is GHKind.EMBEDDED_FLOW
    assert abs(verdict.nu - nu) < 1e-25
    assert verdict.k == k


def test_gh_dichotomy_identical_and_noncommuting():
    rng = rng_from_seed(43)
    G = _rand_tangent_germ(rng)
    same = gh_dichotomy(G, G)
    assert same.kind is GHKind.IDENTICAL_VARIATIONS
    H = DiffeoGerm([1, 0.5], G.order)
    other = gh_dichotomy(G, H)
    assert other.kind in (GHKind.NON_COMMUTING, GHKind.EMBEDDED_FLOW)


def test_project_lift_roundtrip():
    u = DulacSeries(1, 0.2, ((1, (0.1,)), (2, (-0.04,)), (3, (0.02,))), 5)
    F = project_pi(u)
    v = lift_pi(F)
    assert series_close(u, v, 1e-34)
    G = project_pi(v)
    assert germ_close(F, G, 1e-34)


def test_lift_respects_composition():
    u1 = DulacSeries(1, 0, ((1, (0.1,)), (2, (-0.04,))), 5)
    u2 = DulacSeries(1, 0.1, ((1, (0.07,)), (3, (0.02,))), 5)
    lhs = project_pi(compose(u1, u2))
    rhs = project_pi(u1).compose(project_pi(u2))
    assert germ_close(lhs, rhs, 1e-32)


def test_variation_pair_equal_tangency_orders():
    from dulac.derivations import NilpotentDerivation, exp_derivation, lvar_inverse
    # prescribe an unramified derivation-level variation Z, pull it back
    # to X = lvar^{-1}(Z); then f = exp(X) is mildly ramified and
    # tangent to identity
    Z = NilpotentDerivation(((1, (0.3,)), (2, (0.1,))), 5)
    f = exp_derivation(lvar_inverse(Z))
    G, H = variation_pair(f)
    t = 1e-25
    assert G.tangency_order(t) == 1
    assert G.tangency_order(t) == H.tangency_order(t)


def test_fatou_model_relation():
    k, beta = 1, 1.0 / 3.0
    nu = cmath.exp(-2j * math.pi * k * beta)
    for re in (3.0, 5.0, 8.0):
        z = complex(re, 0.4)
        f = fatou_model_map(k, beta, z)
        lhs = fatou_coordinate(k, beta, f)
        rhs = -fatou_coordinate(k, beta, z) / nu
        assert abs(lhs - rhs) < 1e-8 * max(1.0, abs(rhs))


def test_json_roundtrip():
    rng = rng_from_seed(44)
    F = _rand_tangent_germ(rng)
    G = germ_from_json(germ_to_json(F))
    assert germ_close(F, G, 1e-12)
