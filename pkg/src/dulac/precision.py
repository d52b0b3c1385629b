"""Working-precision control for coefficient arithmetic.

All formal computations in this package use complex floating point
coefficients at a configurable decimal precision (default 50 digits),
backed by gmpy2/MPFR.  Two coefficients u, v are considered equal when

    |u - v| <= eps * max(1, |u|, |v|),       eps = 10**-(digits - 10),

i.e. ten guard digits are reserved for rounding noise.

gmpy2 contexts are per-thread; ``set_precision`` configures the calling
thread's context, so worker threads must call it themselves.
"""

import gmpy2

DEFAULT_DIGITS = 50

_digits = None
_eps = None


def set_precision(digits=DEFAULT_DIGITS):
    """Set the working precision (decimal digits) for the current thread."""
    global _digits, _eps
    if digits < 15:
        raise ValueError("working precision must be at least 15 digits")
    _digits = int(digits)
    # ~3.33 bits per decimal digit, plus headroom.
    gmpy2.get_context().precision = int(digits * 3.3220) + 24
    _eps = gmpy2.mpfr(10) ** (-(_digits - 10))
    return _digits


def get_precision():
    if _digits is None:
        set_precision()
    return _digits


def eps():
    """Coefficient comparison tolerance at the current precision."""
    if _eps is None:
        set_precision()
    return _eps


def mpc(re, im=0):
    return gmpy2.mpc(re, im)


def mpfr(x):
    return gmpy2.mpfr(x)


def to_mpc(x):
    """Coerce ints/floats/complex/strings/gmpy2 numbers to mpc."""
    if isinstance(x, gmpy2.mpc):
        return x
    if isinstance(x, complex):
        return gmpy2.mpc(x.real, x.imag)
    return gmpy2.mpc(x)


def is_small(x, tol=None):
    """True when x is equal to zero at working tolerance."""
    if tol is None:
        tol = eps()
    return abs(x) <= tol


def close(u, v, tol=None):
    """Relative-or-absolute coefficient comparison."""
    if tol is None:
        tol = eps()
    u = to_mpc(u)
    v = to_mpc(v)
    return abs(u - v) <= tol * max(gmpy2.mpfr(1), abs(u), abs(v))


def pi():
    if _digits is None:
        set_precision()
    return gmpy2.const_pi()


def two_pi_i():
    """The period 2*pi*i of the exponential chart."""
    return gmpy2.mpc(0, 2 * pi())


INF = gmpy2.mpfr("inf")

# Initialise the default context on import.
set_precision()
