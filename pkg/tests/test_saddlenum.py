"""Numeric saddle transits: path lifts, corner maps, holonomies."""

import cmath
import math

import pytest

from dulac.diffeo import DiffeoGerm
from dulac.errors import BadParameters, LiftExited, PreconditionFailed
from dulac.randomgen import random_prepared_saddle, rng_from_seed
from dulac.saddlenum import (Circular, Exponential, Polyline, PreparedSaddle,
                             Radial, corner_map_numeric, determination_shift,
                             h_omega_lift, h_sigma_lift, holonomy_numeric,
                             lift_path, poincare_numeric)


def _linear(lam, **kw):
    return PreparedSaddle(lam=lam, n=max(1, math.ceil(lam)), K=None, eps=0.0, **kw)


def test_linear_saddle_conserves_first_integral():
    """For K = 0 the lift keeps φ = w + λz exactly: |y x^λ| is constant."""
    s = _linear(1.3)
    # |y| = e^{-Re w} must stay below B = 1 for the whole transit
    w0 = 5.0 + 0.2j
    for path in (Radial(x0=1, T=3.0),
                 Circular(T=-2 * math.pi, z0=0.5),
                 Exponential(alpha=0.7, C=1, T=2.5)):
        res = lift_path(s, path, w0, rtol=1e-12)
        assert not res.exited
        assert abs(res.final_phi - (w0 + s.lam * complex(
            path.param()[1](path.param()[0][0])))) < 1e-8


def test_corner_map_linear_is_lam_z():
    for lam in (0.7, 1.0, math.sqrt(2)):
        s = _linear(lam)
        samples = [3.0 + 0.5j, 4.0 - 1.0j, 5.0]
        for z, d in corner_map_numeric(s, samples, rtol=1e-12):
            assert abs(d - lam * z) < 1e-6


def test_holonomy_linear_multiplier():
    s = _linear(0.7)
    y0 = 0.05
    y1 = holonomy_numeric(s, "Omega", y0, laps=1, rtol=1e-12)
    assert abs(y1 - y0 * cmath.exp(-2j * math.pi * s.lam)) < 1e-8
    x0 = 0.02
    x1 = holonomy_numeric(s, "Sigma", x0, laps=1, rtol=1e-12)
    assert abs(x1 - x0 * cmath.exp(-2j * math.pi / s.lam)) < 1e-8


def test_holonomy_inverse_laps():
    rng = rng_from_seed(61)
    s = random_prepared_saddle(rng, 1.2, eps=0.03)
    y0 = 0.05 + 0.01j
    y1 = holonomy_numeric(s, "Omega", y0, laps=1, rtol=1e-12)
    back = holonomy_numeric(s, "Omega", y1, laps=-1, rtol=1e-12)
    assert abs(back - y0) < 1e-8


def test_perturbed_lift_estimate_holds():
    rng = rng_from_seed(62)
    for _ in range(5):
        s = random_prepared_saddle(rng, 1.0 + rng.random(), eps=0.05)
        res = lift_path(s, Radial(x0=1, T=4.0), 0.3, rtol=1e-10)
        assert res.estimate_ok
        assert res.disagreements == []


def test_lift_exit_raises_when_requested():
    # drive y towards the |y| <= B wall: large eps, long circular path
    s = PreparedSaddle(lam=1.0, n=1, K={(0, 0): 0.4}, eps=0.4, B=1.0)
    with pytest.raises(LiftExited):
        lift_path(s, Circular(T=-40 * math.pi, z0=2.0), -math.log(0.9),
                  raise_on_exit=True)


def test_poincare_linear_one_one():
    s = _linear(1.0)
    R = DiffeoGerm([1, 0.5, 0.25], 3)
    xs = [0.02, 0.03 + 0.01j]
    for x, p in poincare_numeric(s, R, xs, rtol=1e-12):
        assert abs(p - R.eval(x)) < 1e-8


def test_determination_shift_agrees_both_ways():
    rng = rng_from_seed(63)
    s = random_prepared_saddle(rng, 1.1, eps=0.02)
    for z, via_omega, via_sigma in determination_shift(s, 1, [4.0 + 0.3j]):
        assert abs(via_omega - via_sigma) < 1e-5


def test_covering_lifts_shift_by_deck_translations():
    s = _linear(1.4)
    w = 1.0 + 0.2j
    # linear saddle: h_Ω(w) = w + 2πi(1 − λ), h_Σ(z) = z + 2πi(1 − 1/λ)
    assert abs(h_omega_lift(s, w, 1) - (w + 2j * math.pi * (1 - s.lam))) < 1e-8
    z = 3.0 + 0.1j
    assert abs(h_sigma_lift(s, z, 1) - (z + 2j * math.pi * (1 - 1 / s.lam))) < 1e-8


def test_prepared_saddle_validation():
    with pytest.raises(BadParameters):
        PreparedSaddle(lam=-1, n=1)
    with pytest.raises(BadParameters):
        PreparedSaddle(lam=2.5, n=1)
    with pytest.raises(BadParameters):
        PreparedSaddle(lam=1, n=1, eps=1.5, B=1.0)
    with pytest.raises(BadParameters):
        # |K| sampled above the declared bound
        PreparedSaddle(lam=1, n=1, K={(0, 0): 1.0}, eps=0.01)


def test_corner_precondition():
    s = _linear(1.0)
    with pytest.raises(PreconditionFailed):
        corner_map_numeric(s, [-1.0])
