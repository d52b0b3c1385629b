"""Text grammar for truncated Dulac series.

    series   :=  head ( ('+'|'-') item )*
    head     :=  [ number '*' ] 'z'
    item     :=  complex | number | factor '*' 'E[' number ']'
    factor   :=  '(' poly ')' | monomial
    poly     :=  [sign] monomial ( ('+'|'-') monomial )*
    monomial :=  coef [ '*' 'z' [ '^' int ] ]  |  'z' [ '^' int ]
    coef     :=  number | complex
    complex  :=  '(' number ',' number ')'

`E[lambda]` stands for e^(-lambda*z); whitespace is ignored everywhere.
Numbers are parsed at the working precision, so print -> parse is the
identity and parse -> print is the identity up to coefficient formatting.
"""

import re

import gmpy2

from .errors import ParseError
from .poly import Poly
from .precision import INF, mpfr, to_mpc
from .series import DulacSeries

_NUMBER = re.compile(r"\d+\.?\d*([eE][+-]\d+)?|\.\d+([eE][+-]\d+)?")
_PUNCT = "+-*^(),[]"


def _tokenize(text):
    tokens = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c in _PUNCT:
            tokens.append((c, c, i))
            i += 1
            continue
        m = _NUMBER.match(text, i)
        if m:
            tokens.append(("num", m.group(0), i))
            i = m.end()
            continue
        if c == "z":
            tokens.append(("z", "z", i))
            i += 1
            continue
        if c == "E":
            tokens.append(("E", "E", i))
            i += 1
            continue
        raise ParseError("unexpected character %r" % c, position=i)
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos][0]

    def next(self, kind=None):
        tok, val, at = self.tokens[self.pos]
        if kind is not None and tok != kind:
            raise ParseError("unexpected token %r" % (val or "end of input"),
                             position=at, expected=kind)
        self.pos += 1
        return val, at

    def number(self):
        sign = 1
        if self.peek() in "+-":
            sign = -1 if self.next()[0] == "-" else 1
        val, _ = self.next("num")
        return sign * mpfr(val)

    def complex_pair(self):
        self.next("(")
        re_part = self.number()
        self.next(",")
        im_part = self.number()
        self.next(")")
        return gmpy2.mpc(re_part, im_part)

    def monomial(self):
        """(coefficient, power of z)."""
        coef, power = None, 0
        if self.peek() == "(":
            coef = self.complex_pair()
        elif self.peek() == "num":
            coef = mpfr(self.next()[0])
        if coef is not None:
            if self.peek() == "*" and self.tokens[self.pos + 1][0] == "z":
                self.next()
            else:
                return coef, 0
        self.next("z")
        power = 1
        if self.peek() == "^":
            self.next()
            power = int(self.next("num")[0])
        return (gmpy2.mpc(1) if coef is None else coef), power

    def poly(self):
        coeffs = {}
        sign = 1
        if self.peek() in "+-":
            sign = -1 if self.next()[0] == "-" else 1
        while True:
            coef, power = self.monomial()
            coeffs[power] = coeffs.get(power, gmpy2.mpc(0)) + sign * coef
            if self.peek() not in "+-":
                break
            sign = -1 if self.next()[0] == "-" else 1
        degree = max(coeffs)
        return Poly([coeffs.get(k, 0) for k in range(degree + 1)])

    def factor(self):
        """A term coefficient: parenthesized polynomial, complex, or bare."""
        if self.peek() == "(":
            save = self.pos
            try:
                return Poly([self.complex_pair()])
            except ParseError:
                self.pos = save
            self.next("(")
            p = self.poly()
            self.next(")")
            return p
        coef, power = self.monomial()
        return Poly([0] * power + [coef])

    def exponential(self):
        self.next("E")
        self.next("[")
        lam = self.number()
        self.next("]")
        return lam

    def head(self):
        """The affine slope: 'z' or number '*' 'z'."""
        if self.peek() == "z":
            self.next()
            return mpfr(1)
        at = self.tokens[self.pos][2]
        val, _ = self.next("num")
        self.next("*")
        self.next("z")
        a = mpfr(val)
        if not a > 0:
            raise ParseError("multiplier must be positive", position=at)
        return a

    def item(self):
        """(constant contribution, term-or-None)."""
        if self.peek() == "num":
            save = self.pos
            c = mpfr(self.next()[0])
            if self.peek() != "*":
                return gmpy2.mpc(c), None
            self.pos = save
        p = self.factor()
        if self.peek() == "*":
            self.next()
            lam = self.exponential()
            if not lam > 0:
                raise ParseError("term exponent must be positive",
                                 position=self.tokens[self.pos - 1][2])
            return gmpy2.mpc(0), (lam, p)
        if p.degree > 0:
            raise ParseError("polynomial factor needs a *E[lambda] exponential",
                             position=self.tokens[self.pos][2])
        return p.coeffs[0] if p.coeffs else gmpy2.mpc(0), None

    def series(self, validity=INF):
        a = self.head()
        b = gmpy2.mpc(0)
        terms = []
        while self.peek() in "+-":
            sign = -1 if self.next()[0] == "-" else 1
            c, term = self.item()
            b += sign * c
            if term is not None:
                lam, p = term
                terms.append((lam, p * sign if sign < 0 else p))
        self.next("end")
        return DulacSeries(a, b, terms, validity)


def parse_series(text, validity=INF):
    """Parse the text grammar above into a DulacSeries."""
    return _Parser(text).series(validity)


def _fmt_real(x):
    x = mpfr(x)
    if gmpy2.is_integer(x) and abs(x) < 10**15:
        return "%d" % int(x)
    return repr(x).replace("mpfr('", "").split("'", 1)[0]


def _fmt_coef(c):
    c = to_mpc(c)
    if c.imag == 0:
        return _fmt_real(abs(c.real)), c.real < 0
    return "(%s,%s)" % (_fmt_real(c.real), _fmt_real(c.imag)), False


def _fmt_poly(p):
    bits = []
    for k, c in enumerate(p.coeffs):
        if c == 0:
            continue
        text, neg = _fmt_coef(c)
        if k == 1:
            text += "*z"
        elif k > 1:
            text += "*z^%d" % k
        bits.append((neg, text))
    if not bits:
        return "0"
    neg, text = bits[0]
    out = ("-" + text) if neg else text
    for neg, text in bits[1:]:
        out += (" - " if neg else " + ") + text
    return out


def print_series(f):
    """Render a series in the text grammar; parse_series inverts this."""
    out = ["%s*z" % _fmt_real(f.a)]
    if f.b != 0:
        out.append("(%s,%s)" % (_fmt_real(f.b.real), _fmt_real(f.b.imag)))
    for lam, p in f.terms:
        out.append("(%s)*E[%s]" % (_fmt_poly(p), _fmt_real(lam)))
    return " + ".join(out)
