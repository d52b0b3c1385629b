"""Seeded random generators for property suites and batch experiments.

Everything takes an explicit ``random.Random`` instance so suites are
reproducible from a single seed.
"""

import math
import random

import gmpy2

from .poly import Poly
from .precision import mpfr
from .saddlenum import PreparedSaddle
from .series import DulacSeries


def rng_from_seed(seed):
    return random.Random(seed)


def _coef(rng, scale=1.0):
    return gmpy2.mpc(rng.uniform(-scale, scale), rng.uniform(-scale, scale))


def random_poly(rng, max_degree=2, scale=1.0):
    return Poly([_coef(rng, scale) for _ in range(rng.randint(1, max_degree + 1))])


def random_series(rng, validity=5, lam_step=0.5, scale=0.3, max_degree=2,
                  a_range=(0.5, 2.0), affine=True, density=0.6):
    """A random series with exponents on the lam_step grid up to validity."""
    n_slots = int(mpfr(validity) / mpfr(lam_step))
    lams = [lam_step * k for k in range(1, n_slots + 1)]
    terms = [(lam, random_poly(rng, max_degree, scale))
             for lam in lams if rng.random() < density]
    a = rng.uniform(*a_range) if affine else 1
    b = _coef(rng) if affine else 0
    return DulacSeries(a, b, terms, validity)


def random_tangent_series(rng, validity=5, lam_step=0.5, scale=0.3,
                          max_degree=2):
    """Multiplier 1, constant 0: a tangent-to-identity series."""
    return random_series(rng, validity, lam_step, scale, max_degree,
                         affine=False)


def random_unramified(rng, validity=5, scale=0.3):
    """Integer exponents with constant coefficients: the lift of a germ."""
    terms = [(k, Poly([_coef(rng, scale)]))
             for k in range(1, int(mpfr(validity)) + 1) if rng.random() < 0.7]
    return DulacSeries(1, 0, terms, validity)


def random_hyperbolic(rng, validity=4, scale=0.4):
    """Multiplier 1, constant with nonzero real part."""
    re_b = rng.choice([-1, 1]) * rng.uniform(0.3, 1.5)
    b = gmpy2.mpc(re_b, rng.uniform(-1, 1))
    f = random_series(rng, validity, 0.5, scale, affine=False)
    return DulacSeries(1, b, f.terms, validity)


def random_super_attracting(rng, validity=4, scale=0.4):
    a = rng.uniform(1.2, 3.0)
    f = random_series(rng, validity, 0.5, scale, affine=False)
    return DulacSeries(a, _coef(rng), f.terms, validity)


def random_prepared_saddle(rng, lam, eps=0.05, max_order=2):
    """A prepared saddle with ``sup |K| <= eps`` enforced by construction."""
    n = max(1, math.ceil(float(mpfr(lam))))
    pairs = [(i, j) for i in range(max_order + 1) for j in range(max_order + 1)]
    chosen = rng.sample(pairs, rng.randint(1, min(4, len(pairs))))
    raw = {p: _coef(rng) for p in chosen}
    # |K| on the closed polydisk is at most the sum of coefficient moduli.
    total = sum(abs(c) for c in raw.values())
    budget = 0.9 * eps
    K = {p: c * budget / total for p, c in raw.items()}
    return PreparedSaddle(lam=lam, n=n, K=K, eps=eps)
