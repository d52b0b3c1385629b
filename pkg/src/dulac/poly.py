"""Polynomials in the chart variable z with complex mpc coefficients.

These appear as the polynomial factors in front of exponential monomials
e^(-lambda z).  Coefficients are stored ascending by degree; trailing
coefficients that vanish at working tolerance are stripped.
"""

import gmpy2

from .precision import eps, to_mpc, close


class Poly:
    """Dense univariate polynomial over complex mpc coefficients."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs=()):
        mk = gmpy2.mpc
        cs = [c if type(c) is mk else to_mpc(c) for c in coeffs]
        tol = eps()
        while cs and abs(cs[-1]) <= tol:
            cs.pop()
        self.coeffs = tuple(cs)

    # -- constructors -------------------------------------------------

    @staticmethod
    def _raw(cs):
        """Internal: coefficients already mpc; only strip trailing zeros."""
        tol = eps()
        while cs and abs(cs[-1]) <= tol:
            cs.pop()
        p = object.__new__(Poly)
        p.coeffs = tuple(cs)
        return p

    @staticmethod
    def const(c):
        return Poly([c])

    @staticmethod
    def x():
        return Poly([0, 1])

    # -- structure ----------------------------------------------------

    @property
    def degree(self):
        """Degree; -1 for the zero polynomial."""
        return len(self.coeffs) - 1

    def is_zero(self, tol=None):
        if tol is None:
            return not self.coeffs
        return all(abs(c) <= tol for c in self.coeffs)

    def __getitem__(self, k):
        if 0 <= k < len(self.coeffs):
            return self.coeffs[k]
        return gmpy2.mpc(0)

    def __iter__(self):
        return iter(self.coeffs)

    def __len__(self):
        return len(self.coeffs)

    # -- arithmetic ---------------------------------------------------

    def __add__(self, other):
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for i, c in enumerate(b):
            out[i] += c
        return Poly._raw(out)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return Poly._raw([-c for c in self.coeffs])

    def __mul__(self, other):
        if isinstance(other, Poly):
            a, b = self.coeffs, other.coeffs
            if not a or not b:
                return Poly()
            if len(a) == 1 and len(b) == 1:
                return Poly._raw([a[0] * b[0]])
            out = [gmpy2.mpc(0)] * (len(a) + len(b) - 1)
            for i, ai in enumerate(a):
                for j, bj in enumerate(b):
                    out[i + j] += ai * bj
            return Poly._raw(out)
        c = to_mpc(other)
        return Poly._raw([ci * c for ci in self.coeffs])

    __rmul__ = __mul__

    def deriv(self):
        return Poly._raw([k * c for k, c in enumerate(self.coeffs)][1:])

    def shift(self, c):
        """P(z + c) via iterated Horner in the shifted variable."""
        c = to_mpc(c)
        res = Poly()
        for coeff in reversed(self.coeffs):
            res = res * Poly([c, 1]) + Poly.const(coeff)
        return res

    def __call__(self, v):
        """Evaluate at a numeric point (mpc) by Horner."""
        acc = gmpy2.mpc(0)
        for coeff in reversed(self.coeffs):
            acc = acc * v + coeff
        return acc

    def equal(self, other, tol=None):
        n = max(len(self.coeffs), len(other.coeffs))
        return all(close(self[k], other[k], tol) for k in range(n))

    def max_abs(self):
        return max((abs(c) for c in self.coeffs), default=gmpy2.mpfr(0))

    def __repr__(self):
        return "Poly(%s)" % (list(self.coeffs),)
