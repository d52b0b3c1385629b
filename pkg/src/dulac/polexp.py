"""Truncated polynomial-exponential sums  sum_lambda P_lambda(z) e^(-lambda z).

This is the internal working ring for series composition and derivation
calculus.  Exponents lambda are nonnegative reals; the lambda = 0 slot
holds a plain polynomial part of arbitrary degree (intermediate results
only -- public series constrain it to degree <= 1).  Terms are kept
sorted by exponent, exponents closer than the coefficient tolerance are
merged, and everything beyond a truncation exponent is dropped.
"""

import gmpy2

from .poly import Poly
from .precision import INF, eps, mpfr


def beyond(lam, validity):
    """True when an exponent lies strictly past the truncation exponent.

    Exponents reached along different arithmetic routes (products, sums of
    sub-exponents) can differ in the last ulp, so the comparison allows the
    same relative slack that term merging uses; a term sitting exactly on
    the truncation exponent is kept.
    """
    if lam <= validity:
        return False
    tol = eps()
    return abs(lam - validity) > tol * max(gmpy2.mpfr(1), abs(lam))


def _merge_key(terms, lam, tol):
    """Index of an existing exponent matching lam, or None."""
    for i, (mu, _) in enumerate(terms):
        if abs(mu - lam) <= tol * max(gmpy2.mpfr(1), abs(mu), abs(lam)):
            return i
        if mu > lam:
            break
    return None


class PolExp:
    """Sorted term list [(lambda, Poly)], lambda >= 0, zero polys dropped."""

    __slots__ = ("terms",)

    def __init__(self, terms=()):
        tol = eps()
        one = gmpy2.mpfr(1)
        # terms are sorted first, so merging only ever pairs neighbours
        cleaned = []
        fr = gmpy2.mpfr
        for lam, p in sorted(terms, key=lambda t: t[0]):
            if p.is_zero():
                continue
            if type(lam) is not fr:
                lam = mpfr(lam)
            if lam < 0:
                raise ValueError("negative exponent in polynomial-exponential sum")
            if cleaned:
                mu, q = cleaned[-1]
                if abs(mu - lam) <= tol * max(one, abs(mu), abs(lam)):
                    r = q + p
                    if r.is_zero():
                        cleaned.pop()
                    else:
                        cleaned[-1] = (mu, r)
                    continue
            cleaned.append((lam, p))
        self.terms = tuple(cleaned)

    @staticmethod
    def zero():
        return PolExp()

    @staticmethod
    def of_poly(p):
        return PolExp([(mpfr(0), p)])

    @staticmethod
    def monomial(lam, p):
        return PolExp([(mpfr(lam), p)])

    def is_zero(self):
        return not self.terms

    def min_exp(self):
        """Flatness: smallest exponent present (INF when zero)."""
        return self.terms[0][0] if self.terms else INF

    def min_positive_exp(self):
        for lam, _ in self.terms:
            if lam > 0:
                return lam
        return INF

    def poly_part(self):
        if self.terms and self.terms[0][0] == 0:
            return self.terms[0][1]
        return Poly()

    def tail(self):
        """The part with strictly positive exponents."""
        return PolExp([(l, p) for l, p in self.terms if l > 0])

    # -- ring operations ----------------------------------------------

    def __add__(self, other):
        return PolExp(self.terms + other.terms)

    def __neg__(self):
        return PolExp([(l, -p) for l, p in self.terms])

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        from .precision import to_mpc
        c = to_mpc(c)
        raw = Poly._raw
        return PolExp([(l, raw([ci * c for ci in p.coeffs]))
                       for l, p in self.terms])

    def mul(self, other, validity=INF):
        # Exponents repeat heavily (grid sums), so accumulate by exact
        # exponent first; the constructor then merges near-duplicates.
        acc = {}
        for l1, p1 in self.terms:
            if beyond(l1, validity):
                break
            for l2, p2 in other.terms:
                l = l1 + l2
                if beyond(l, validity):
                    break
                q = p1 * p2
                prev = acc.get(l)
                acc[l] = q if prev is None else prev + q
        return PolExp(list(acc.items()))

    def shift_exp(self, lam):
        """Multiply by e^(-lam z)."""
        return PolExp([(l + lam, p) for l, p in self.terms])

    def truncate(self, validity):
        return PolExp([(l, p) for l, p in self.terms if not beyond(l, validity)])

    def deriv(self):
        """d/dz, using (P e^(-l z))' = (P' - l P) e^(-l z)."""
        return PolExp([(l, p.deriv() - l * p) for l, p in self.terms])

    def max_abs(self):
        return max((p.max_abs() for _, p in self.terms), default=gmpy2.mpfr(0))

    def equal(self, other, tol=None, up_to=INF):
        diff = (self - other).truncate(up_to)
        if tol is None:
            tol = eps()
        scale = max(gmpy2.mpfr(1), self.truncate(up_to).max_abs(),
                    other.truncate(up_to).max_abs())
        return all(p.max_abs() <= tol * scale for _, p in diff.terms)

    def eval(self, z):
        """Numeric evaluation of the truncated sum at a point."""
        acc = gmpy2.mpc(0)
        for l, p in self.terms:
            acc += p(z) * gmpy2.exp(-l * gmpy2.mpc(z))
        return acc

    def __repr__(self):
        return "PolExp(%s)" % ([(float(l), list(p.coeffs)) for l, p in self.terms],)


def polexp_pow_exp(tail, lam, validity):
    """Expansion of exp(-lam * tail) truncated at the validity exponent.

    ``tail`` must have strictly positive minimal exponent, so the series
    sum_j (-lam*tail)^j / j! terminates once j * min_exp exceeds validity.
    """
    mu = tail.min_exp()
    one = PolExp.of_poly(Poly.const(1))
    if tail.is_zero():
        return one
    if mu <= 0:
        raise ValueError("exp expansion requires a flat (positive-exponent) tail")
    acc = one
    term = one
    j = 0
    while not beyond((j + 1) * mu, validity):
        j += 1
        term = term.mul(tail, validity).scale(-lam / j)
        if term.is_zero():
            break
        acc = acc + term
    return acc.truncate(validity)
