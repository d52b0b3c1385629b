"""Diffeomorphism germs at 0, formal fields, and the covering projection.

The substitution x = e^(-z) projects unramified Dulac series onto germs
of one-variable diffeomorphisms fixing the origin; the kernel of this
morphism is the cyclic group generated by the deck translation
τ(z) = z + 2πi.  The module also provides Lie-series flows of formal
vector fields, their formal infinitesimal generators, the dichotomy
classifying a pair of tangent-to-identity germs by commutation, and a
numeric model map checked in a Fatou-like coordinate.
"""

import cmath
import enum
import math
from dataclasses import dataclass

import gmpy2

from .errors import (BadParameters, NoConvergence, NotMildlyRamified,
                     NotTangentToIdentity, NotUnramified)
from .poly import Poly
from .precision import INF, close, eps, is_small, mpfr, to_mpc, two_pi_i


# ---------------------------------------------------------------------------
# Truncated power-series helpers (coefficient lists c[n] for x^(n+1))
# ---------------------------------------------------------------------------


def _series_mul(u, v, order):
    """Product of two series with zero constant term, both as c[n] ↔ x^(n+1)."""
    out = [gmpy2.mpc(0)] * order
    for i, a in enumerate(u):
        if i + 2 > order:
            break
        for j, b in enumerate(v):
            d = i + j + 2
            if d > order:
                break
            out[d - 1] += a * b
    return out


def _unit_mul(p, q, order):
    """Product of two series with nonzero constant term, c[n] ↔ x^n."""
    out = [gmpy2.mpc(0)] * (order + 1)
    for i, a in enumerate(p):
        if i > order:
            break
        for j, b in enumerate(q):
            if i + j > order:
                break
            out[i + j] += a * b
    return out


def _unit_log(p, order):
    """log of a series with p[0] = 1, returned as c[n] ↔ x^n with c[0] = 0."""
    u = list(p[1:]) + [gmpy2.mpc(0)] * max(0, order - len(p) + 1)
    # log(1+u) = u - u²/2 + u³/3 - …, u flat of order ≥ 1
    out = [gmpy2.mpc(0)] * (order + 1)
    power = [gmpy2.mpc(1)] + [gmpy2.mpc(0)] * order
    upad = [gmpy2.mpc(0)] + u[:order]
    n = 1
    while n <= order:
        power = _unit_mul(power, upad, order)
        if all(is_small(c) for c in power):
            break
        sign = gmpy2.mpq(-1, 1) ** (n + 1) / n
        for i, c in enumerate(power):
            out[i] += c * sign
        n += 1
    return out


def _unit_exp(p, order):
    """exp of a series with p[0] = 0, returned as c[n] ↔ x^n with c[0] = 1."""
    out = [gmpy2.mpc(1)] + [gmpy2.mpc(0)] * order
    term = [gmpy2.mpc(1)] + [gmpy2.mpc(0)] * order
    upad = list(p[: order + 1]) + [gmpy2.mpc(0)] * max(0, order + 1 - len(p))
    n = 1
    while n <= order:
        term = _unit_mul(term, upad, order)
        term = [c / n for c in term]
        if all(is_small(c) for c in term):
            break
        for i, c in enumerate(term):
            out[i] += c
        n += 1
    return out


# ---------------------------------------------------------------------------
# DiffeoGerm
# ---------------------------------------------------------------------------


class DiffeoGerm:
    """F(x) = c₁x + c₂x² + … + c_N x^N with c₁ ≠ 0, truncated at degree N."""

    __slots__ = ("coeffs", "order")

    def __init__(self, coeffs, order=None):
        cs = [to_mpc(c) for c in coeffs]
        if order is None:
            order = len(cs)
        if order < 1:
            raise ValueError("order must be at least 1")
        cs = cs[:order] + [gmpy2.mpc(0)] * max(0, order - len(cs))
        if abs(cs[0]) <= eps():
            raise ValueError("germ must be invertible: c_1 != 0")
        self.coeffs = tuple(cs)
        self.order = order

    @staticmethod
    def identity(order=1):
        return DiffeoGerm([1], order)

    def __getitem__(self, n):
        """Coefficient of x^n (1-based)."""
        return self.coeffs[n - 1] if 1 <= n <= self.order else gmpy2.mpc(0)

    def multiplier(self):
        return self.coeffs[0]

    def is_tangent_to_identity(self, tol=None):
        return close(self.coeffs[0], 1, tol)

    def is_identity(self, tol=None):
        t = tol or eps()
        return self.is_tangent_to_identity(tol) and all(
            abs(c) <= t for c in self.coeffs[1:]
        )

    def tangency_order(self, tol=None):
        """Least k ≥ 1 with c_{k+1} ≠ 0, for a tangent-to-identity germ."""
        t = tol or eps()
        if not self.is_tangent_to_identity(tol):
            raise NotTangentToIdentity("tangency order needs multiplier 1")
        for n in range(2, self.order + 1):
            if abs(self.coeffs[n - 1]) > t:
                return n - 1
        return None

    def compose(self, other):
        """(self ∘ other)(x) = self(other(x)), truncated at min order."""
        order = min(self.order, other.order)
        return DiffeoGerm(
            _compose_coeffs(self.coeffs, list(other.coeffs[:order]), order), order
        )

    def invert(self):
        """Compositional inverse, solved order by order."""
        order = self.order
        c1 = self.coeffs[0]
        g = [1 / c1] + [gmpy2.mpc(0)] * (order - 1)
        for n in range(2, order + 1):
            # coefficient of x^n in self(g) must vanish
            val = _compose_coeffs(self.coeffs, g, order)
            g[n - 1] -= val[n - 1] / c1
        res = _compose_coeffs(self.coeffs, g, order)
        if abs(res[0] - 1) > eps() * 10 or any(
            abs(c) > eps() * 10 * max(1, _maxabs(self.coeffs)) for c in res[1:]
        ):
            raise NoConvergence("series inversion failed")
        return DiffeoGerm(g, order)

    def equal(self, other, tol=None):
        t = tol or eps()
        order = min(self.order, other.order)
        scale = max(gmpy2.mpfr(1), _maxabs(self.coeffs), _maxabs(other.coeffs))
        return all(
            abs(self.coeffs[i] - other.coeffs[i]) <= t * scale for i in range(order)
        )

    def eval(self, x):
        x = to_mpc(x)
        acc = gmpy2.mpc(0)
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc * x

    def __repr__(self):
        bits = []
        for n, c in enumerate(self.coeffs, start=1):
            if abs(c) > eps():
                bits.append("(%s)*x^%d" % (complex(c), n))
        return "DiffeoGerm<%s | order %d>" % (" + ".join(bits) or "0", self.order)


def _compose_coeffs(f, g, order):
    """Coefficients of f(g(x)) for germ coefficient lists (c[n] ↔ x^(n+1))."""
    acc = [gmpy2.mpc(0)] * order
    # g^n computed iteratively as germ lists (c[m] ↔ x^(m+1)).
    gn = None
    for n, c in enumerate(f[:order], start=1):
        gn = list(g[:order]) if gn is None else _series_mul(gn, g, order)
        for m, a in enumerate(gn):
            acc[m] += c * a
    return acc


def _maxabs(cs):
    return max((abs(c) for c in cs), default=gmpy2.mpfr(0))


def germ_close(F, G, tol=None):
    return F.equal(G, tol)


# ---------------------------------------------------------------------------
# FormalField
# ---------------------------------------------------------------------------


class FormalField:
    """Vector field a(x)·x·d/dx; ``coeffs`` are a₀, a₁, … of a(x)."""

    __slots__ = ("coeffs", "order")

    def __init__(self, coeffs, order=None):
        cs = [to_mpc(c) for c in coeffs]
        if order is None:
            order = max(len(cs), 1)
        cs = cs[:order] + [gmpy2.mpc(0)] * max(0, order - len(cs))
        self.coeffs = tuple(cs)
        self.order = order

    @staticmethod
    def zero(order=1):
        return FormalField([], order)

    def is_zero(self, tol=None):
        t = tol or eps()
        return all(abs(c) <= t for c in self.coeffs)

    def v_coeffs(self):
        """Coefficients of v(x) = a(x)·x as a germ list (c[n] ↔ x^(n+1))."""
        return list(self.coeffs)

    def flat_order(self, tol=None):
        t = tol or eps()
        for n, c in enumerate(self.coeffs):
            if abs(c) > t:
                return n
        return None

    def scale(self, t):
        return FormalField([c * to_mpc(t) for c in self.coeffs], self.order)

    def __neg__(self):
        return self.scale(-1)

    def __add__(self, other):
        order = min(self.order, other.order)
        return FormalField(
            [self.coeffs[i] + other.coeffs[i] for i in range(order)], order
        )

    def __sub__(self, other):
        return self + (-other)

    def apply_to(self, h, order):
        """V(h) = v(x)·h'(x) for a series h with zero constant term."""
        hp = [h[i] * (i + 1) for i in range(min(len(h), order))]  # h' shifted: x^i
        v = self.v_coeffs()
        out = [gmpy2.mpc(0)] * order
        for i, a in enumerate(v):  # a ↔ x^(i+1)
            for j, b in enumerate(hp):  # b ↔ x^j
                d = i + j + 1
                if d > order:
                    break
                out[d - 1] += a * b
        return out

    def proportional_to(self, other, tol=None):
        """Return t with self = t·other, or None."""
        t = tol or eps()
        order = min(self.order, other.order)
        scale = max(gmpy2.mpfr(1), _maxabs(self.coeffs), _maxabs(other.coeffs))
        ratio = None
        for i in range(order):
            a, b = self.coeffs[i], other.coeffs[i]
            if abs(b) <= t * scale:
                if abs(a) > t * scale:
                    return None
                continue
            r = a / b
            if ratio is None:
                ratio = r
            elif abs(r - ratio) > mpfr(1e6) * t * max(gmpy2.mpfr(1), abs(ratio)):
                return None
        return ratio

    def __repr__(self):
        bits = [
            "(%s)*x^%d" % (complex(c), n)
            for n, c in enumerate(self.coeffs)
            if abs(c) > eps()
        ]
        return "FormalField<(%s)*x*d/dx | order %d>" % (
            " + ".join(bits) or "0",
            self.order,
        )


def exp_field(V):
    """Formal time-1 flow of V: the Lie series x + Vx + V²x/2! + ….

    A field of order N determines the flow exactly through degree N,
    so the result carries the same order.
    """
    order = V.order
    acc = [gmpy2.mpc(1)] + [gmpy2.mpc(0)] * (order - 1)
    term = list(acc)
    scale = max(gmpy2.mpfr(1), _maxabs(V.coeffs))
    tol = eps()
    for n in range(1, 80 + 4 * order):
        term = [c / n for c in V.apply_to(term, order)]
        if _maxabs(term) <= tol * scale:
            break
        for i, c in enumerate(term):
            acc[i] += c
    else:
        raise NoConvergence("Lie series did not settle at the truncation degree")
    return DiffeoGerm(acc, order)


def infinitesimal_generator(F):
    """Formal field V with exp_field(V) = F to the germ's degree."""
    tol = eps()
    if not F.is_tangent_to_identity():
        raise NotTangentToIdentity("generator needs a tangent-to-identity germ")
    if F.is_identity():
        raise NotTangentToIdentity("the identity has the zero generator; rejected")
    order = F.order
    V = FormalField([0] + list(F.coeffs[1:]), order)
    scale = max(gmpy2.mpfr(1), _maxabs(F.coeffs))
    for _ in range(order + 20):
        resid = [F.coeffs[i] - exp_field(V).coeffs[i] for i in range(order)]
        if _maxabs(resid) <= tol * scale:
            return V
        V = V + FormalField([gmpy2.mpc(0)] + resid[1:], order)
    raise NoConvergence("generator iteration did not converge")


# ---------------------------------------------------------------------------
# Covering projection x = e^(-z)
# ---------------------------------------------------------------------------


def project_pi(f, order=None):
    """Project an unramified Dulac series to the germ e^(-b)·x·e^(-T(x)).

    T(x) is the tail of f under e^(-z) → x; the truncation degree
    defaults to floor of the validity (or the largest support exponent
    when the validity is infinite).
    """
    from .series import is_unramified

    if not is_unramified(f):
        raise NotUnramified("projection requires an unramified series")
    if order is None:
        if f.validity == INF:
            ks = [int(gmpy2.rint(l)) for l, _ in f.terms]
            order = max(ks) + 1 if ks else 1
        else:
            order = max(1, int(gmpy2.floor(f.validity)))
    # tail as power-series coefficients t[k] ↔ x^k
    t = [gmpy2.mpc(0)] * (order + 1)
    for lam, p in f.terms:
        k = int(gmpy2.rint(lam))
        if 1 <= k <= order:
            t[k] += p[0]
    unit = _unit_exp([-c for c in t], order)  # e^{-T(x)}
    lam0 = gmpy2.exp(-to_mpc(f.b))
    coeffs = [lam0 * unit[n - 1] for n in range(1, order + 1)]
    return DiffeoGerm(coeffs, order)


def lift_pi(F, branch=0):
    """Unramified Dulac series with project_pi(lift) = F.

    The constant is b = −Log(c₁) − 2πi·branch (principal logarithm);
    the integer ``branch`` selects the representative modulo the deck
    translation.  A germ of order N determines the tail only through
    exponent N−1, so the lift carries validity N−½.
    """
    from .series import DulacSeries

    order = F.order
    c1 = F.multiplier()
    b = -gmpy2.log(c1) - two_pi_i() * branch
    unit = [c / c1 for c in F.coeffs]  # 1 + Σ a_k x^k
    t = _unit_log(unit, order)  # = −T(x)
    terms = [(mpfr(k), Poly([-t[k]])) for k in range(1, order)]
    return DulacSeries(1, b, terms, mpfr(order) - mpfr("0.5"))


# ---------------------------------------------------------------------------
# The G/H dichotomy and variation pairs
# ---------------------------------------------------------------------------


class GHKind(enum.Enum):
    NON_COMMUTING = "NonCommuting"
    EMBEDDED_FLOW = "EmbeddedFlow"
    IDENTICAL_VARIATIONS = "IdenticalVariations"


@dataclass(frozen=True)
class GHVerdict:
    kind: GHKind
    k: object = None  # tangency order
    nu: object = None  # EmbeddedFlow parameter
    leading: object = None  # leading commutator coefficient
    degree: int = None  # degree at which the verdict was decided
    formal_only: bool = True  # decided at truncation, not a convergence claim


def gh_dichotomy(G, H, tol=None):
    """Classify a tangent-to-identity pair by commutation at truncation.

    The commutator is taken in the order [H, G] = H⁻¹∘G⁻¹∘H∘G.  If it is
    nontrivial the verdict carries its leading coefficient; otherwise the
    infinitesimal generators are compared: identical germs give
    IdenticalVariations(k), proportional generators V_H = t·V_G give
    EmbeddedFlow(k, ν) with ν = −1/t.
    """
    t = tol or (eps() * 100)
    if not (G.is_tangent_to_identity() and H.is_tangent_to_identity()):
        raise NotTangentToIdentity("dichotomy needs tangent-to-identity germs")
    order = min(G.order, H.order)
    comm = H.invert().compose(G.invert()).compose(H).compose(G)
    scale = max(gmpy2.mpfr(1), _maxabs(G.coeffs), _maxabs(H.coeffs))
    for n in range(2, order + 1):
        c = comm[n]
        if abs(c) > t * scale:
            return GHVerdict(
                kind=GHKind.NON_COMMUTING, leading=c, degree=n, formal_only=True
            )
    kG = G.tangency_order(t)
    if G.equal(H, t):
        return GHVerdict(kind=GHKind.IDENTICAL_VARIATIONS, k=kG, degree=order)
    VG = infinitesimal_generator(G)
    VH = infinitesimal_generator(H)
    ratio = VH.proportional_to(VG, t)
    if ratio is None:
        return GHVerdict(
            kind=GHKind.NON_COMMUTING, leading=gmpy2.mpc(0), degree=order
        )
    return GHVerdict(kind=GHKind.EMBEDDED_FLOW, k=kG, nu=-1 / ratio, degree=order)


def flow_field(k, nu, order):
    """The model field 2πi·x^k/(1 + x^k/(1−ν))·x·d/dx expanded to ``order``."""
    nu = to_mpc(nu)
    if close(nu, 1):
        raise BadParameters("flow field requires ν ≠ 1")
    c = 1 / (1 - nu)
    t = two_pi_i()
    coeffs = [gmpy2.mpc(0)] * order
    m = 1
    sign = gmpy2.mpc(1)
    while m * k <= order - 1:
        coeffs[m * k] = t * sign
        sign = sign * (-c)
        m += 1
    return FormalField(coeffs, order)


def variation_pair(f, order=None):
    """(G, H) = (Π(var f), Π(var f⁻¹)) for a mildly ramified series."""
    from .series import invert, is_mildly_ramified, variation

    if not is_mildly_ramified(f):
        raise NotMildlyRamified("variation pair requires a mildly ramified series")
    G = project_pi(variation(f), order)
    H = project_pi(variation(invert(f)), order)
    return G, H


# ---------------------------------------------------------------------------
# Fatou-coordinate model map (numeric, double precision)
# ---------------------------------------------------------------------------


def fatou_coordinate(k, beta, z):
    """w(z) = −(1/2πi)·(e^(kz) + k·z/(1−ν)) with ν = e^(−2πikβ)."""
    nu = cmath.exp(-2j * math.pi * k * beta)
    return -(cmath.exp(k * z) + k * z / (1 - nu)) / (2j * math.pi)


def fatou_model_map(k, beta, z, tol=1e-13, max_iter=200):
    """Solve e^(kf) + c·f = −(1/ν)(e^(kz) + c·z), c = k/(1−ν), by damped Newton.

    The solution satisfies w(f) = −w(z)/ν in the Fatou coordinate; the
    seed comes from the dominant balance e^(kf) ≈ −e^(kz)/ν for large
    Re z, which gives f ≈ z + 2πiβ + iπ/k.
    """
    z = complex(z)
    nu = cmath.exp(-2j * math.pi * k * beta)
    if abs(nu - 1) < 1e-12:
        raise BadParameters("model map requires ν ≠ 1 (kβ must not be an integer)")
    c = k / (1 - nu)
    rhs = -(cmath.exp(k * z) + c * z) / nu
    f = z + 2j * math.pi * beta + 1j * math.pi / k

    def g(w):
        return cmath.exp(k * w) + c * w - rhs

    r = g(f)
    scale = max(1.0, abs(rhs))
    for _ in range(max_iter):
        if abs(r) <= tol * scale:
            return f
        dg = k * cmath.exp(k * f) + c
        if dg == 0:
            raise NoConvergence("degenerate Newton step in model map")
        step = -r / dg
        lam = 1.0
        for _ in range(60):
            cand = f + lam * step
            rc = g(cand)
            if abs(rc) < abs(r):
                f, r = cand, rc
                break
            lam *= 0.5
        else:
            raise NoConvergence("damped Newton stalled in model map")
    raise NoConvergence("model map root finding did not converge")


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def germ_to_json(F):
    return {
        "coeffs": [[float(c.real), float(c.imag)] for c in F.coeffs],
        "order": F.order,
    }


def germ_from_json(obj):
    return DiffeoGerm(
        [gmpy2.mpc(c[0], c[1]) for c in obj["coeffs"]], obj.get("order")
    )
