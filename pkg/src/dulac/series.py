"""Truncated formal Dulac series and their group operations.

A series is  f(z) = a·z + b + Σ_λ P_λ(z) e^(-λz)  with real multiplier
a > 0, complex constant b, finitely many exponents 0 < λ ≤ Λ, trusted
modulo o(e^(-Λz)).  Composition makes these a group; ``variation``
measures the failure to commute with the deck translation τ(z) = z+2πi.

Composition-order convention
----------------------------
``compose(f, g)`` is f∘g, i.e. g is applied first.  Group-theoretic
words such as the commutator are read as application pipelines: the
product "x y" means "apply x, then y", so [τ,f] = τ^{-1} f^{-1} τ f is
the germ obtained by applying τ^{-1}, then f^{-1}, then τ, then f.
This is the reading under which the Lie-algebra formulas of the
derivation module (lvar = X − X^τ + ½[X,X^τ] + …, with X^τ the
conjugate by z ↦ z−2πi) hold verbatim; see NOTES.md for the worked
sign check.
"""

import enum
from dataclasses import dataclass

import gmpy2

from .errors import NoConvergence
from .poly import Poly
from .polexp import PolExp, beyond, polexp_pow_exp
from .precision import INF, close, eps, is_small, mpfr, to_mpc, two_pi_i


class DulacSeries:
    """Immutable truncated Dulac series."""

    __slots__ = ("a", "b", "terms", "validity")

    def __init__(self, a, b, terms=(), validity=INF):
        a = mpfr(a)
        if not (a > 0):
            raise ValueError("multiplier must be a positive real")
        self.a = a
        self.b = to_mpc(b)
        validity = mpfr(validity)
        if not (validity > 0):
            raise ValueError("validity must be positive")
        self.validity = validity
        tail = PolExp(
            [(mpfr(l), p if isinstance(p, Poly) else Poly(p)) for l, p in terms]
        ).truncate(validity)
        if tail.terms and tail.terms[0][0] <= 0:
            raise ValueError("series terms must have strictly positive exponents")
        self.terms = tail.terms

    # -- constructors ---------------------------------------------------

    @staticmethod
    def identity(validity=INF):
        return DulacSeries(1, 0, (), validity)

    @staticmethod
    def affine(a, b, validity=INF):
        return DulacSeries(a, b, (), validity)

    @staticmethod
    def from_tail(tail, validity, a=1, b=0):
        return DulacSeries(a, b, tail.terms, validity)

    # -- views ----------------------------------------------------------

    def tail(self):
        """The flat part Σ P_λ e^(-λz) as a PolExp."""
        return PolExp(self.terms)

    def full_polexp(self):
        """a·z + b + tail as a PolExp (polynomial slot holds the affine part)."""
        return PolExp(((mpfr(0), Poly([self.b, self.a])),) + self.terms)

    def is_identity(self, tol=None):
        return (
            close(self.a, 1, tol)
            and is_small(self.b, tol)
            and all(p.max_abs() <= (tol or eps()) for _, p in self.terms)
        )

    def term_coeff(self, lam):
        """Polynomial at exponent lam (zero polynomial when absent)."""
        tol = eps()
        for l, p in self.terms:
            if abs(l - lam) <= tol * max(gmpy2.mpfr(1), abs(l), abs(mpfr(lam))):
                return p
        return Poly()

    def deriv_polexp(self):
        """f'(z) as a PolExp."""
        return PolExp(((mpfr(0), Poly([self.a])),)) + PolExp(self.terms).deriv()

    def eval(self, z):
        """Numeric evaluation of the truncated sum at a point z (mpc)."""
        z = to_mpc(z)
        return self.a * z + self.b + PolExp(self.terms).eval(z)

    def __repr__(self):
        bits = ["%s*z" % self.a]
        if self.b != 0:
            bits.append(str(self.b))
        for l, p in self.terms:
            bits.append("(%s)*E[%s]" % (list(p.coeffs), float(l)))
        v = "inf" if self.validity == INF else "%g" % float(self.validity)
        return "DulacSeries<%s | validity %s>" % (" + ".join(bits), v)


def tau(validity=INF):
    """The deck translation τ(z) = z + 2πi at working precision."""
    return DulacSeries(1, two_pi_i(), (), validity)


def series_close(f, g, tol=None):
    """Equality up to the smaller validity, coefficientwise within tolerance."""
    v = min(f.validity, g.validity)
    if not close(f.a, g.a, tol) or not close(f.b, g.b, tol):
        return False
    return PolExp(f.terms).equal(PolExp(g.terms), tol=tol, up_to=v)


# ---------------------------------------------------------------------------
# Composition and inversion
# ---------------------------------------------------------------------------


def _dict_mul(d1, d2, validity):
    """Product of two {exponent: Poly} maps, truncated past validity."""
    acc = {}
    for l1, p1 in d1.items():
        for l2, p2 in d2.items():
            l = l1 + l2
            if beyond(l, validity):
                continue
            q = p1 * p2
            prev = acc.get(l)
            acc[l] = q if prev is None else prev + q
    return acc


def substitute_tail(tail, g, validity):
    """Re-expand Σ P_λ(z)e^(-λz) after the substitution z -> g(z).

    Each term becomes  e^(-λ b_g) · P_λ(g(z)) · e^(-λ a_g z) · exp(-λ·T)
    where T is the flat part of g; the exponential of the flat part is a
    terminating series at the truncation exponent.  The whole expansion
    accumulates in plain {exponent: Poly} maps and is normalised once.
    """
    T = g.tail()
    gd = dict(g.full_polexp().terms)
    zero = mpfr(0)
    # Powers T^j/j! are shared by every exp(-λ·T) factor below.
    tpows = [{zero: Poly.const(1)}]
    if not T.is_zero():
        Td = dict(T.terms)
        mu = T.min_exp()
        j = 0
        while not beyond((j + 1) * mu, validity):
            j += 1
            inv_j = gmpy2.mpq(1, j)
            nxt = {l: p * inv_j
                   for l, p in _dict_mul(tpows[-1], Td, validity).items()}
            if not nxt:
                break
            tpows.append(nxt)
    res = {}
    for lam, p in tail.terms:
        base = lam * g.a
        if beyond(base, validity):
            break
        budget = validity - base
        # P_lam(g(z)) by Horner in the truncated pol-exp ring.
        pg = {}
        for c in reversed(p.coeffs):
            pg = _dict_mul(pg, gd, budget)
            cp = Poly.const(c)
            prev = pg.get(zero)
            pg[zero] = cp if prev is None else prev + cp
        # exp(-λ·T) assembled from the cached powers, cut to the budget.
        factor = {}
        c = gmpy2.mpfr(1)
        for j, tp in enumerate(tpows):
            if j:
                c = c * (-lam)
            for l, q in tp.items():
                if beyond(l, budget):
                    continue
                qc = q * c
                prev = factor.get(l)
                factor[l] = qc if prev is None else prev + qc
        eb = gmpy2.exp(-lam * g.b)
        for l, q in _dict_mul(pg, factor, budget).items():
            key = l + base
            qe = q * eb
            prev = res.get(key)
            res[key] = qe if prev is None else prev + qe
    return PolExp(list(res.items())).truncate(validity)


def compose(f, g):
    """The composition f∘g (g applied first)."""
    validity = min(g.validity, g.a * f.validity)
    if validity == INF and (f.terms or g.terms):
        raise ValueError(
            "composing series with flat terms requires a finite validity")
    tail = PolExp(g.terms).scale(f.a) + substitute_tail(PolExp(f.terms), g, validity)
    return DulacSeries(f.a * g.a, f.a * g.b + f.b, tail.truncate(validity).terms,
                       validity)


def invert(f):
    """Compositional inverse, by Newton iteration on the residual f∘g − id."""
    validity = f.validity / f.a
    g = DulacSeries(1 / f.a, -f.b / f.a, (), validity)
    if not f.terms:
        return g
    if validity == INF:
        raise ValueError(
            "inverting a series with flat terms requires a finite validity")
    tol = eps()
    # Each pass resolves one more flatness level, so the work is staged:
    # iterate at a growing truncation exponent and only pay for
    # full-validity compositions once the shallow levels are settled.
    level = f.terms[0][0] / f.a

    def truncated(h, v):
        if v >= h.validity:
            return h
        return DulacSeries(h.a, h.b,
                           tuple((l, p) for l, p in h.terms if not beyond(l, v)),
                           v)

    for _ in range(200):
        v = min(level, validity)
        e = compose(truncated(f, v * f.a), truncated(g, v))
        err_a = e.a - 1
        err_tail = PolExp(e.terms)
        scale = max(gmpy2.mpfr(1), err_tail.max_abs(), abs(e.b))
        done = abs(err_a) <= tol and abs(e.b) <= tol * scale and \
            err_tail.max_abs() <= tol * scale
        if done and v >= validity:
            return g
        if done:
            level = 2 * level
            continue
        g = DulacSeries(
            g.a - err_a / f.a,
            g.b - e.b / f.a,
            (PolExp(g.terms).truncate(v) - err_tail.scale(1 / f.a)).terms
            + tuple((l, p) for l, p in g.terms if beyond(l, v)),
            validity,
        )
    raise NoConvergence("series inversion did not converge")


# ---------------------------------------------------------------------------
# Group words, variation, classification
# ---------------------------------------------------------------------------


def gmul(x, y):
    """Pipeline product: apply x, then y (the germ y∘x)."""
    return compose(y, x)


def gconj(x, y):
    """Conjugate x^y = y^{-1} x y in pipeline order."""
    return gmul(gmul(invert(y), x), y)


def gcomm(x, y):
    """Commutator [x,y] = x^{-1} y^{-1} x y in pipeline order."""
    return gmul(gmul(gmul(invert(x), invert(y)), x), y)


def variation(f):
    """var(f) = [τ, f]; the identity exactly when f commutes with τ."""
    return gcomm(tau(), f)


def is_unramified(f, tol=None):
    """Support criterion: multiplier 1, integer exponents, constant polynomials."""
    if tol is None:
        tol = eps()
    if not close(f.a, 1, tol):
        return False
    for lam, p in f.terms:
        if p.max_abs() <= tol:
            continue
        k = gmpy2.rint(lam)
        if abs(lam - k) > tol * max(gmpy2.mpfr(1), abs(lam)) or k < 1:
            return False
        if p.degree > 0:
            return False
    return True


def is_mildly_ramified(f, tol=None):
    return is_unramified(variation(f), tol)


class DynType(enum.Enum):
    SUPER_ATTRACTING = "SuperAttracting"
    SUPER_REPELLING = "SuperRepelling"
    HYP_ATTRACTING = "HypAttracting"
    HYP_REPELLING = "HypRepelling"
    INDIFFERENT = "Indifferent"


@dataclass(frozen=True)
class Classification:
    kind: DynType
    boundary_warning: bool = False

    def __eq__(self, other):
        if isinstance(other, DynType):
            return self.kind is other
        if isinstance(other, Classification):
            return self.kind is other.kind and \
                self.boundary_warning == other.boundary_warning
        return NotImplemented


def classify(f):
    """Dynamical type from the affine part; |Re b| at tolerance is Indifferent.

    The ``boundary_warning`` flag marks multipliers/constants that sit at
    the tolerance boundary, where floating point cannot separate the cases.
    """
    tol = eps()
    if not close(f.a, 1):
        kind = DynType.SUPER_ATTRACTING if f.a > 1 else DynType.SUPER_REPELLING
        return Classification(kind, abs(f.a - 1) <= 4 * tol)
    re_b = f.b.real
    if abs(re_b) <= tol * max(gmpy2.mpfr(1), abs(f.b)):
        return Classification(DynType.INDIFFERENT, True)
    kind = DynType.HYP_ATTRACTING if re_b > 0 else DynType.HYP_REPELLING
    return Classification(kind, False)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def series_to_json(f):
    return {
        "multiplier": float(f.a),
        "constant": [float(f.b.real), float(f.b.imag)],
        "terms": [
            {
                "lambda": float(l),
                "poly": [[float(c.real), float(c.imag)] for c in p.coeffs],
            }
            for l, p in f.terms
        ],
        "validity": None if f.validity == INF else float(f.validity),
    }


def series_from_json(obj):
    validity = obj.get("validity")
    terms = [
        (t["lambda"], Poly([gmpy2.mpc(c[0], c[1]) for c in t["poly"]]))
        for t in obj.get("terms", [])
    ]
    b = obj.get("constant", [0, 0])
    return DulacSeries(
        obj.get("multiplier", 1),
        gmpy2.mpc(b[0], b[1]),
        terms,
        INF if validity is None else validity,
    )
