"""Loop-germ assembly and the Liouville-integrability classifier.

A loop germ glues the two separatrix transversals of a saddle by a
diffeomorphism germ R; its Poincaré first-return germ is the gluing
composed with a determination of the corner transition.  Integrable
loop germs fall into three models — linear, Bernoulli, Poincaré-Dulac —
and the classifier decides membership at truncation through the
functional equation R'(y)·F(R(y)) = α·F(y) with
F(y) = A(y)·y^(−a)·Π exp(b_j y^(−j)), handled through its logarithmic
derivative (a finite Laurent object).
"""

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction

import gmpy2
import numpy as np

from .diffeo import (DiffeoGerm, FormalField, _maxabs, _series_mul,
                     _unit_exp, _unit_log, _unit_mul, infinitesimal_generator,
                     lift_pi)
from .errors import (BadParameters, DeterminationMismatch, FitIllConditioned,
                     LiftExited, NotTangentToIdentity)
from .precision import close, eps, is_small, mpfr, to_mpc
from .saddlenum import _integrate


# ---------------------------------------------------------------------------
# Unit-series helpers (lists c[n] ↔ y^n with c[0] ≠ 0)
# ---------------------------------------------------------------------------


def _unit_inv(p, order):
    """Reciprocal of a unit series."""
    p0 = to_mpc(p[0])
    norm = [to_mpc(c) / p0 for c in p]
    return [c / p0 for c in _unit_exp([-c for c in _unit_log(norm, order)], order)]


def _unit_ipow(p, m, order):
    """Integer power p^m of a unit series."""
    p0 = to_mpc(p[0])
    norm = [to_mpc(c) / p0 for c in p]
    lg = _unit_log(norm, order)
    out = _unit_exp([m * c for c in lg], order)
    head = p0**m
    return [head * c for c in out]


def _germ_unit(R):
    """R(y)/y as a unit series list of length R.order."""
    return list(R.coeffs)


def _derivative_unit(R):
    """R'(y) as a unit series (degree R.order − 1)."""
    return [(n + 1) * c for n, c in enumerate(R.coeffs)]


# ---------------------------------------------------------------------------
# Formal Poincaré maps and determinations
# ---------------------------------------------------------------------------


def poincare_formal(d, R, branch=0):
    """Formal first-return germ: the unramified lift of R after d."""
    from .series import compose

    return compose(lift_pi(R, branch), d)


def canonical_holonomies(d0):
    """The transversal holonomy lifts (hSigma, hOmega) attached to d0.

    With this library's composition conventions the monodromy relation
    d0 ∘ τ = τ ∘ hOmega⁻¹ ∘ d0 identifies hOmega⁻¹ with variation(d0)
    and hSigma with variation(d0⁻¹)⁻¹; both are unramified when d0 is
    mildly ramified.
    """
    from .series import invert, variation

    h_omega = invert(variation(d0))
    h_sigma = invert(variation(invert(d0)))
    return h_sigma, h_omega


def _series_power(h, n):
    """h composed with itself n times (n ∈ Z; n=0 gives the identity)."""
    from .series import DulacSeries, compose, invert

    if n == 0:
        return DulacSeries.identity(h.validity)
    base = h if n > 0 else invert(h)
    acc = base
    for _ in range(abs(n) - 1):
        acc = compose(acc, base)
    return acc


def determination_formal(d0, hSigma, hOmega, n):
    """n-th determination: hOmega^(−n) ∘ d0, asserted equal to d0 ∘ hSigma^n."""
    from .series import compose, is_unramified, series_close

    if not (is_unramified(hSigma) and is_unramified(hOmega)):
        raise BadParameters("determination holonomies must be unramified")
    via_omega = compose(_series_power(hOmega, -n), d0)
    via_sigma = compose(d0, _series_power(hSigma, n))
    if not series_close(via_omega, via_sigma, eps() * 100):
        raise DeterminationMismatch(
            "h_Omega^(-n) d0 and d0 h_Sigma^n disagree for n=%d" % n
        )
    return via_omega


# ---------------------------------------------------------------------------
# Bernoulli functional equation (logarithmic-derivative form)
# ---------------------------------------------------------------------------


def bernoulli_functional_check(R, a, b, A=(1,)):
    """Residual of R'(y)·F(R(y)) = α·F(y) for F = A·y^(−a)·Π exp(b_j y^(−j)).

    F is never expanded (it is not a power series); instead the exact
    Laurent identity log R' + log(A∘R/A) − a·log(R/y) + Σ b_j(R^(−j) −
    y^(−j)) = log α is checked coefficientwise.  Returns (alpha,
    residual) with residual the largest non-constant coefficient.
    """
    a = to_mpc(a)
    b = [to_mpc(c) for c in b]
    A = [to_mpc(c) for c in A]
    if is_small(A[0]):
        raise BadParameters("unit factor A must satisfy A(0) != 0")
    order = R.order - 1
    G = {}

    def add(m, c):
        G[m] = G.get(m, gmpy2.mpc(0)) + c

    # log R'
    for i, c in enumerate(_unit_log_any(_derivative_unit(R), order)):
        add(i, c)
    # log A(R) − log A
    if len(A) > 1:
        AR = _compose_unit(A, R, order)
        for i, (c1, c2) in enumerate(
            zip(_unit_log_any(AR, order), _unit_log_any(A, order))
        ):
            add(i, c1 - c2)
    # −a log(R/y)
    if not is_small(a):
        for i, c in enumerate(_unit_log_any(_germ_unit(R), order)):
            add(i, -a * c)
    # Σ b_j (R^(−j) − y^(−j))
    for j, bj in enumerate(b, start=1):
        if is_small(bj):
            continue
        w = _unit_ipow(_germ_unit(R), -j, order)
        for i, c in enumerate(w):
            add(i - j, bj * c)
        add(-j, -bj)

    alpha = gmpy2.exp(G.pop(0, gmpy2.mpc(0)))
    scale = max(gmpy2.mpfr(1), _maxabs(R.coeffs), _maxabs(b), abs(a))
    residual = max(
        (abs(c) / scale for m, c in G.items()), default=gmpy2.mpfr(0)
    )
    return alpha, residual


def _unit_log_any(p, order):
    """log of a unit series with arbitrary nonzero head, as c[n] ↔ y^n."""
    p0 = to_mpc(p[0])
    out = _unit_log([to_mpc(c) / p0 for c in p], order)
    out[0] += gmpy2.log(p0)
    return out


def _compose_unit(A, R, order):
    """A(R(y)) for a unit series A and a germ R, as a unit list."""
    out = [to_mpc(A[0])] + [gmpy2.mpc(0)] * order
    Rn = None
    g = list(R.coeffs)
    for k, c in enumerate(A[1:], start=1):
        Rn = g if Rn is None else _series_mul(Rn, g, order + 1)
        for m, v in enumerate(Rn):  # v ↔ y^(m+1)
            if m + 1 <= order:
                out[m + 1] += to_mpc(c) * v
    return out


# ---------------------------------------------------------------------------
# Numeric Bernoulli holonomy
# ---------------------------------------------------------------------------


def bernoulli_holonomy_numeric(
    k, a, d, sigma, Q, fit_order=None, radii=(0.03, 0.05, 0.07), args=8
):
    """Holonomy of y^(k+1)dx = x(1+a·y^k+x^d·y^σ·Q(y))dy on {x=1}.

    Integrates dy/dt = 2πi·y^(k+1)/(1+a·y^k+e^(2πidt)·y^σ·Q(y)) around
    the positively oriented unit circle from sampled starting points and
    fits a truncated germ by least squares.
    """
    k = int(k)
    d = int(d)
    sigma = int(sigma)
    if k < 1:
        raise BadParameters("order k must be a positive integer")
    if d < -1 or d == 0:
        raise BadParameters("d must lie in Z_{>=-1} minus {0}")
    if sigma < 0:
        raise BadParameters("sigma must be nonnegative")
    q = [complex(c) for c in Q]
    if len(q) > k:
        raise BadParameters("deg Q must be at most k-1")
    a = complex(a)
    s_ad = sigma + a * d
    if abs(s_ad.imag) < 1e-12 and s_ad.real <= 0:
        raise BadParameters("sigma + a*d must avoid the nonpositive reals")

    def qeval(y):
        acc = 0j
        for c in reversed(q):
            acc = acc * y + c
        return acc

    def rhs(t, y):
        denom = 1 + a * y**k + cmath.exp(2j * math.pi * d * t) * y**sigma * qeval(y)
        return 2j * math.pi * y ** (k + 1) / denom

    samples = []
    for r in radii:
        for m in range(args):
            y0 = r * cmath.exp(2j * math.pi * (m + 0.31) / args)
            y1 = _integrate(rhs, 0.0, 1.0, y0, rtol=1e-12, atol=1e-16)
            if abs(y1) > 0.5:
                raise LiftExited("holonomy sample escaped the unit region")
            samples.append((y0, y1))

    order = fit_order or (2 * k + 3)
    rows = np.array([[y0**n for n in range(1, order + 1)] for y0, _ in samples])
    vals = np.array([y1 for _, y1 in samples])
    sol, _, rank, sv = np.linalg.lstsq(rows, vals, rcond=None)
    if rank < order or sv[-1] == 0 or sv[0] / sv[-1] > 1e12:
        raise FitIllConditioned(
            "Vandermonde fit condition number too large; reduce fit order"
        )
    return DiffeoGerm(list(sol), order)


# ---------------------------------------------------------------------------
# Integrability classifier
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LinearizableSaddle:
    lam: float


@dataclass(frozen=True)
class PoincareDulacSaddle:
    """Resonant 1:1 saddle with formal invariants (k, mu)."""

    k: int
    mu: complex


@dataclass(frozen=True)
class LoopGermSpec:
    saddle: object
    R: DiffeoGerm


@dataclass
class IntegrabilityVerdict:
    klass: str  # Linear | Bernoulli | PoincareDulac | NotIntegrable | Inconclusive
    params: dict = field(default_factory=dict)
    certificate: dict = field(default_factory=dict)
    degree: int = 0

    def to_json(self):
        def enc(v):
            if isinstance(v, (gmpy2.mpc().__class__, complex)):
                v = complex(v)
                return [v.real, v.imag]
            if isinstance(v, gmpy2.mpfr().__class__):
                return float(v)
            return v

        return {
            "class": self.klass,
            "params": {k: enc(v) for k, v in self.params.items()},
            "certificate": {k: enc(v) for k, v in self.certificate.items()},
            "degree": self.degree,
        }


def _root_of_unity_order(theta, maxq=64, tol=1e-9):
    theta = complex(theta)
    if abs(abs(theta) - 1) > tol:
        return None
    acc = 1 + 0j
    for q in range(1, maxq + 1):
        acc *= theta
        if abs(acc - 1) < tol:
            return q
    return None


def _is_linear_germ(R, tol):
    scale = max(gmpy2.mpfr(1), _maxabs(R.coeffs))
    return all(abs(c) <= tol * scale for c in R.coeffs[1:])


def _germ_iterate(R, n):
    acc = R
    for _ in range(n - 1):
        acc = acc.compose(R)
    return acc


def _fit_bernoulli(R, qprime, tol):
    """Least-squares solve of L(R)·R' − L = −R''/R' over admissible Laurent L.

    L = F'/F has slots y^(−j−1) only for exponents j that are multiples
    of qprime (plus the residue slot y^(−1) and a power-series part);
    returns (a, b, A, fit_residual) or None when no admissible L fits.
    """
    order = R.order - 2
    if order < 2:
        return None
    jmax = min(order, max(qprime, 4 * qprime))
    js = [j for j in range(qprime, jmax + 1) if j % qprime == 0]
    exps = sorted({-j - 1 for j in js} | {-1} | set(range(0, order)))
    lo = min(exps)
    slots = list(range(lo, order + 1))
    slot_index = {m: i for i, m in enumerate(slots)}

    Rc = [complex(c) for c in R.coeffs]
    g = Rc  # germ list c[n] ↔ y^(n+1)

    def unit_pow(m):
        return [complex(c) for c in _unit_ipow(R.coeffs, m, order + abs(lo) + 1)]

    rp = [complex(c) for c in _derivative_unit(R)]  # R' unit, c[i] ↔ y^i

    def laurent_mul_unit(lau, unit):
        out = {}
        for m, c in lau.items():
            for i, u in enumerate(unit):
                mm = m + i
                if mm > order:
                    break
                out[mm] = out.get(mm, 0j) + c * u
        return out

    cols = []
    for m in exps:
        # T(y^m) = R^m·R' − y^m
        if m >= 0:
            # R^m as a power series: y^m·(R/y)^m
            w = unit_pow(m)
        else:
            w = unit_pow(m)
        lau = {m + i: w[i] for i in range(len(w)) if lo <= m + i <= order}
        lau = laurent_mul_unit(lau, rp)
        lau[m] = lau.get(m, 0j) - 1.0
        col = np.zeros(len(slots), dtype=complex)
        for mm, c in lau.items():
            if mm in slot_index:
                col[slot_index[mm]] = c
        cols.append(col)

    # RHS: −R''/R'
    rpp = [(n + 1) * (n + 2) * Rc[n + 1] for n in range(len(Rc) - 1)]  # R'' ↔ y^n
    inv_rp = [complex(c) for c in _unit_inv(_derivative_unit(R), order)]
    rhs_series = _poly_mul_trunc(rpp, inv_rp, order)
    rhs = np.zeros(len(slots), dtype=complex)
    for n, c in enumerate(rhs_series):
        if n in slot_index:
            rhs[slot_index[n]] = -c

    M = np.array(cols).T
    sol, _, rank, sv = np.linalg.lstsq(M, rhs, rcond=None)
    fit_resid = float(np.linalg.norm(M @ sol - rhs, ord=np.inf))
    scale = max(1.0, max(abs(c) for c in Rc))
    if fit_resid > tol * scale:
        return None
    L = dict(zip(exps, sol))
    a = -L.get(-1, 0j)
    b = [0j] * jmax
    for j in js:
        b[j - 1] = -L.get(-j - 1, 0j) / j
    # A from the power-series part: log A = Σ_{m≥0} L_m y^(m+1)/(m+1)
    logA = [gmpy2.mpc(0)] * (order + 1)
    for m in range(0, order):
        logA[m + 1] = to_mpc(L.get(m, 0j)) / (m + 1)
    A = _unit_exp(logA, order)
    return a, b, A, fit_resid


def _poly_mul_trunc(p, q, order):
    out = [0j] * (order + 1)
    for i, a in enumerate(p):
        if i > order:
            break
        for j, c in enumerate(q):
            if i + j > order:
                break
            out[i + j] += a * c
    return out


def _proportional_flow_shape(R, k, tol):
    """If the generator of R is y^(k+1)/(c(1 + y^k/(1-ν)))·d/dy, return ν."""
    try:
        V = infinitesimal_generator(R)
    except NotTangentToIdentity:
        return None
    v = V.v_coeffs()  # v[m] ↔ y^(m+1)
    scale = max(gmpy2.mpfr(1), _maxabs(v))
    if any(abs(v[m]) > tol * scale for m in range(min(k, len(v)))):
        return None
    if len(v) <= k or abs(v[k]) <= tol * scale:
        return None
    order = len(v) - k - 1
    unit = v[k : k + order + 1]  # v = y^(k+1)·(unit)
    W = _unit_inv(unit, order)  # y^(k+1)/v = c(1 + ν y^k)
    wscale = max(gmpy2.mpfr(1), _maxabs(W))
    for m in range(1, order + 1):
        if m != k and abs(W[m]) > tol * wscale * 1e3:
            return None
    c = W[0]
    if k > order or abs(W[k]) <= tol * wscale:
        return None
    # W[k]/c = 1/(1-ν), so ν = 1 - c/W[k]
    return 1 - c / W[k]


def classify_integrability(spec, tol=None):
    """Decide the integrability model of a loop germ at truncation."""
    t = tol or eps() * 1e4
    R = spec.R
    degree = R.order
    if isinstance(spec.saddle, PoincareDulacSaddle):
        k = spec.saddle.k
        mu = to_mpc(spec.saddle.mu)
        if R.is_identity():
            return IntegrabilityVerdict(
                "PoincareDulac", {"k": k, "mu": mu, "nu": gmpy2.mpc(0)},
                {"generator_residual": 0.0}, degree,
            )
        if R.is_tangent_to_identity(t):
            nu = _proportional_flow_shape(R, k, t)
            if nu is not None:
                return IntegrabilityVerdict(
                    "PoincareDulac", {"k": k, "mu": mu, "nu": nu}, {}, degree
                )
        if close(mu, mpfr("0.5"), t):
            return IntegrabilityVerdict(
                "NotIntegrable",
                {"k": k, "mu": mu},
                {"reason": "gluing does not embed in the model flow; "
                           "nonzero Bernoulli perturbation obstructs a "
                           "first integral (decided at truncation)"},
                degree,
            )
        return IntegrabilityVerdict(
            "Inconclusive", {"k": k, "mu": mu},
            {"reason": "resonant saddle with non-embeddable gluing; "
                       "solvability undecided at truncation"},
            degree,
        )

    lam = float(spec.saddle.lam)
    frac = Fraction(lam).limit_denominator(64)
    is_rational = abs(lam - float(frac)) < 1e-9
    is_one = is_rational and frac == 1

    if not is_one:
        if _is_linear_germ(R, t):
            return IntegrabilityVerdict(
                "Linear", {"lam": lam, "multiplier": R.multiplier()}, {}, degree
            )
        return IntegrabilityVerdict(
            "NotIntegrable", {"lam": lam},
            {"reason": "nonresonant or p:q eigenratio admits only linear "
                       "gluings; first nonlinear coefficient at degree %d"
                       % (next(n for n in range(2, R.order + 1)
                               if abs(R[n]) > t))},
            degree,
        )

    # eigenratio 1, linearizable saddle
    theta = R.multiplier()
    if _is_linear_germ(R, t):
        return IntegrabilityVerdict(
            "Linear", {"lam": 1.0, "multiplier": theta}, {}, degree
        )
    if abs(abs(complex(theta)) - 1) > 1e-9:
        # hyperbolic multiplier: linearizable, hence a linear model
        return IntegrabilityVerdict(
            "Linear", {"lam": 1.0, "multiplier": theta},
            {"reason": "hyperbolic multiplier forces linearizability"}, degree,
        )
    qprime = _root_of_unity_order(theta)
    if qprime is None:
        return IntegrabilityVerdict(
            "Inconclusive", {"lam": 1.0, "multiplier": theta},
            {"reason": "irrational rotation number: formal linearizability "
                       "does not decide analytic linearizability at "
                       "truncation", "first_undecided_degree": 2},
            degree,
        )
    if _germ_iterate(R, qprime).is_identity(t * 100):
        return IntegrabilityVerdict(
            "Linear", {"lam": 1.0, "multiplier": theta},
            {"periodic_order": qprime}, degree,
        )
    fit = _fit_bernoulli(R, qprime, 1e-8)
    if fit is not None:
        a, b, A, fit_resid = fit
        alpha, resid = bernoulli_functional_check(R, a, b, A)
        if resid < 1e-8:
            # order of the underlying Bernoulli equation: the pole order
            # of F minus one, read off the exponential part and the
            # power-law exponent a
            k_order = max(
                (j for j, bj in enumerate(b, start=1) if abs(bj) > 1e-8),
                default=0,
            )
            ar = complex(a).real
            if abs(complex(a).imag) < 1e-8 and abs(ar - round(ar)) < 1e-8:
                k_order = max(k_order, int(round(ar)) - 1)
            return IntegrabilityVerdict(
                "Bernoulli",
                {"k_order": k_order, "a": to_mpc(a), "alpha": alpha,
                 "multiplier": theta},
                {"fit_residual": fit_resid, "functional_residual": resid},
                degree,
            )
    return IntegrabilityVerdict(
        "Inconclusive", {"lam": 1.0, "multiplier": theta},
        {"reason": "root-of-unity multiplier but no admissible Bernoulli "
                   "datum found at this truncation",
         "first_undecided_degree": R.order + 1},
        degree,
    )


# ---------------------------------------------------------------------------
# Solvable p:q pair check
# ---------------------------------------------------------------------------


def solvable_pq_check(p, q, k, epsilon):
    """Verify the order-p/order-q generator pair at degree 4k+2.

    G = e^(2πiq/p)·x and H = e^(2πip/q)·x·(1+εx^k)^(−1/k) satisfy
    G^p = id and H^q = id; the pair commutes exactly when ε = 0.
    """
    p, q, k = int(p), int(q), int(k)
    if math.gcd(p, q) != 1:
        raise BadParameters("p and q must be coprime")
    if k % p == 0 or k % q == 0:
        raise BadParameters("k must avoid pZ and qZ")
    if epsilon not in (0, 1):
        raise BadParameters("epsilon must be 0 or 1")
    order = 4 * k + 2
    two_pi = 2 * gmpy2.const_pi()
    zg = gmpy2.exp(gmpy2.mpc(0, 1) * two_pi * q / p)
    zh = gmpy2.exp(gmpy2.mpc(0, 1) * two_pi * p / q)
    G = DiffeoGerm([zg], order)
    # (1 + ε x^k)^(−1/k) by the binomial series
    coeffs = [gmpy2.mpc(0)] * order
    coeffs[0] = zh
    if epsilon:
        binom = gmpy2.mpc(1)
        e = gmpy2.mpfr(-1) / k
        m = 0
        while (m + 1) * k < order:
            binom = binom * (e - m) / (m + 1)
            coeffs[(m + 1) * k] = zh * binom
            m += 1
    H = DiffeoGerm(coeffs, order)
    tol = eps() * 1000
    ok = _germ_iterate(G, p).is_identity(tol) and _germ_iterate(H, q).is_identity(tol)
    comm = H.invert().compose(G.invert()).compose(H).compose(G)
    if epsilon == 0:
        ok = ok and comm.is_identity(tol)
    else:
        ok = ok and not comm.is_identity(tol)
    return ok
