"""Lie calculus of nilpotent derivations X = Σ P_λ(z) e^(-λz) d/dz, λ > 0.

These derivations are flat (every exponent strictly positive), so all
the series below — exponentials, logarithms, commutator expansions —
terminate at the truncation exponent.  ``exp_derivation`` and
``log_series`` realize the bijection with the tangent-to-identity
subgroup of the Dulac group; ``lvar`` is the derivation-level shadow of
the group variation, satisfying  lvar(X) = X − X^τ + ½[X, X^τ] + …
with X^τ the conjugate by the deck translation.
"""

import gmpy2

from . import series as ds
from .errors import (NoConvergence, NotSolvable, NotTangent, NotUnramified,
                     Unramified, ZeroDerivation)
from .poly import Poly
from .polexp import PolExp, beyond
from .precision import INF, close, eps, is_small, mpfr, pi, to_mpc, two_pi_i


class NilpotentDerivation:
    """Immutable flat derivation; ``terms`` maps exponents to polynomials."""

    __slots__ = ("terms", "validity")

    def __init__(self, terms=(), validity=INF):
        validity = mpfr(validity)
        if not (validity > 0):
            raise ValueError("validity must be positive")
        pe = PolExp(
            [(mpfr(l), p if isinstance(p, Poly) else Poly(p)) for l, p in terms]
        ).truncate(validity)
        if pe.terms and pe.terms[0][0] <= 0:
            raise ValueError("derivation exponents must be strictly positive")
        self.terms = pe.terms
        self.validity = validity

    @staticmethod
    def zero(validity=INF):
        return NilpotentDerivation((), validity)

    @staticmethod
    def from_polexp(pe, validity):
        return NilpotentDerivation(pe.terms, validity)

    def polexp(self):
        return PolExp(self.terms)

    def is_zero(self, tol=None):
        t = tol or eps()
        return all(p.max_abs() <= t for _, p in self.terms)

    def flatness(self):
        return self.terms[0][0] if self.terms else INF

    def scale(self, c):
        return NilpotentDerivation.from_polexp(self.polexp().scale(c), self.validity)

    def __neg__(self):
        return self.scale(-1)

    def __add__(self, other):
        return NilpotentDerivation.from_polexp(
            self.polexp() + other.polexp(), min(self.validity, other.validity)
        )

    def __sub__(self, other):
        return self + (-other)

    def apply_to(self, h, validity):
        """X(h) = (Σ P_λ e^(-λz)) · h'(z) for a pol-exp element h."""
        return self.polexp().mul(h.deriv(), validity)

    def equal(self, other, tol=None):
        v = min(self.validity, other.validity)
        return self.polexp().equal(other.polexp(), tol=tol, up_to=v)

    def __repr__(self):
        bits = ["(%s)*E[%s]" % (list(p.coeffs), float(l)) for l, p in self.terms]
        v = "inf" if self.validity == INF else "%g" % float(self.validity)
        return "Derivation<%s | validity %s>" % (" + ".join(bits) or "0", v)


def derivation_close(X, Y, tol=None):
    return X.equal(Y, tol)


# ---------------------------------------------------------------------------
# Bracket, exp, log
# ---------------------------------------------------------------------------


def bracket(X, Y):
    """[X, Y] with [P e^(-λz)∂, Q e^(-μz)∂] = (P(Q'−μQ) − (P'−λP)Q) e^(-(λ+μ)z)∂."""
    validity = min(X.validity, Y.validity)
    out = []
    for lam, p in X.terms:
        for mu, q in Y.terms:
            if beyond(lam + mu, validity):
                break
            r = p * (q.deriv() - mu * q) - (p.deriv() - lam * p) * q
            out.append((lam + mu, r))
    return NilpotentDerivation(out, validity)


def exp_derivation(X):
    """(Exp X)(z) = z + Xz + X²z/2! + …; a tangent-to-identity Dulac series."""
    validity = X.validity
    z_elem = PolExp.of_poly(Poly([0, 1]))
    acc = PolExp()
    term = z_elem
    n = 0
    while True:
        term = X.apply_to(term, validity).scale(gmpy2.mpq(1, n + 1))
        n += 1
        if term.is_zero() or beyond(term.min_exp(), validity):
            break
        acc = acc + term
    return ds.DulacSeries(1, 0, acc.truncate(validity).terms, validity)


def apply_exp_operator(X, h, validity):
    """Σ X^n(h)/n! — the ring automorphism e^X applied to a pol-exp element."""
    acc = h
    term = h
    n = 0
    while True:
        term = X.apply_to(term, validity).scale(gmpy2.mpq(1, n + 1))
        n += 1
        if term.is_zero() or beyond(term.min_exp(), validity):
            break
        acc = acc + term
    return acc.truncate(validity)


def log_series(f):
    """Inverse of exp_derivation, solved order by order on the residual."""
    tol = eps()
    if not close(f.a, 1) or not is_small(f.b, tol * max(gmpy2.mpfr(1), abs(f.b))):
        raise NotTangent("log requires multiplier 1 and zero constant")
    validity = f.validity
    X = NilpotentDerivation(f.terms, validity)
    target = PolExp(f.terms)
    for _ in range(200):
        resid = target - PolExp(exp_derivation(X).terms)
        scale = max(gmpy2.mpfr(1), target.max_abs())
        if resid.truncate(validity).max_abs() <= tol * scale:
            return X
        X = X + NilpotentDerivation.from_polexp(resid, validity)
    raise NoConvergence("derivation logarithm did not converge")


# ---------------------------------------------------------------------------
# Deck conjugation and the derivation-level variation
# ---------------------------------------------------------------------------


def conj_tau(X):
    """X^τ: each P_λ e^(-λz)∂ becomes e^(2πiλ) P_λ(z−2πi) e^(-λz)∂."""
    shift = -two_pi_i()
    out = []
    for lam, p in X.terms:
        out.append((lam, p.shift(shift) * gmpy2.exp(two_pi_i() * lam)))
    return NilpotentDerivation(out, X.validity)


def lvar(X):
    """Derivation-level variation: log of variation(exp(X)).

    Computed operator-style (no group inversion): the germ of
    var(Exp X) is the operator product e^{−X^τ} e^{X} applied to z,
    whose logarithm expands as X − X^τ + ½[X,X^τ] + … with all omitted
    terms at least 3λ-flat for λ-flat X.
    """
    validity = X.validity
    if X.is_zero():
        return NilpotentDerivation.zero(validity)
    A = -conj_tau(X)
    u = apply_exp_operator(X, PolExp.of_poly(Poly([0, 1])), validity)
    v = apply_exp_operator(A, u, validity)
    tail = (v - PolExp.of_poly(Poly([0, 1]))).truncate(validity)
    germ = ds.DulacSeries(1, 0, tail.terms, validity)
    return log_series(germ)


def is_unramified_derivation(X, tol=None):
    """Support criterion: integer exponents ≥ 1, degree-0 polynomials."""
    if tol is None:
        tol = eps()
    for lam, p in X.terms:
        if p.max_abs() <= tol:
            continue
        k = gmpy2.rint(lam)
        if abs(lam - k) > tol * max(gmpy2.mpfr(1), abs(lam)) or k < 1:
            return False
        if p.degree > 0:
            return False
    return True


# ---------------------------------------------------------------------------
# Difference operators and the basis polynomials
# ---------------------------------------------------------------------------


def delta(P):
    """(ΔP)(z) = P(z) − P(z−2πi); kernel is the constants."""
    return P - P.shift(-two_pi_i())


def basis_polynomial(k):
    """P_0 = 1, P_k = (2πi)^{-k} z(z+2πi)···(z+2πi(k−1)); ΔP_k = kP_{k−1}."""
    t = two_pi_i()
    p = Poly([1])
    for j in range(k):
        p = p * Poly([j * t, 1])
    return p * (t ** gmpy2.mpz(-k) if k else 1)


def solve_delta(Q, constant=0):
    """P with ΔP = Q, the free additive constant fixed by ``constant``.

    Works in the basis P_k: if Q = Σ q_k P_k then P = Σ q_k P_{k+1}/(k+1)
    plus the chosen constant.
    """
    tol = eps()
    d = Q.degree
    if d < 0:
        return Poly([constant])
    # Expand Q over the basis polynomials by descending-degree elimination.
    basis = [basis_polynomial(k) for k in range(d + 2)]
    q = list(Q.coeffs)
    coords = [gmpy2.mpc(0)] * (d + 1)
    for k in range(d, -1, -1):
        lead = basis[k][k]
        coords[k] = q[k] / lead
        for j in range(k + 1):
            q[j] -= coords[k] * basis[k][j]
    if max((abs(c) for c in q), default=0) > tol * max(gmpy2.mpfr(1), Q.max_abs()):
        raise NotSolvable("basis expansion failed")
    P = Poly([constant])
    for k, c in enumerate(coords):
        P = P + basis[k + 1] * (c / (k + 1))
    return P


def solve_twisted_delta(Q, lam):
    """P with P(z) − e^(2πiλ) P(z−2πi) = Q(z), for non-integer λ.

    The operator is upper triangular on the monomial basis with constant
    diagonal 1 − e^(2πiλ) ≠ 0, so the solve is a back-substitution.
    """
    c = gmpy2.exp(two_pi_i() * lam)
    diag = 1 - c
    if is_small(diag):
        raise NotSolvable("twisted difference operator is singular at integer λ")
    d = Q.degree
    if d < 0:
        return Poly()
    shift = -two_pi_i()
    p = [gmpy2.mpc(0)] * (d + 1)
    binom = [[gmpy2.mpz(0)] * (d + 1) for _ in range(d + 1)]
    for i in range(d + 1):
        binom[i][0] = gmpy2.mpz(1)
        for j in range(1, i + 1):
            binom[i][j] = binom[i - 1][j - 1] + binom[i - 1][j]
    for j in range(d, -1, -1):
        # coefficient of z^j in ΔλP: diag*p_j − c * Σ_{i>j} p_i C(i,j) shift^{i−j}
        acc = Q[j]
        for i in range(j + 1, d + 1):
            acc += c * p[i] * binom[i][j] * shift ** (i - j)
        p[j] = acc / diag
    return Poly(p)


def _near_integer(lam, tol):
    k = gmpy2.rint(lam)
    return (abs(lam - k) <= tol * max(gmpy2.mpfr(1), abs(lam)), int(k))


def lvar_inverse(Z, section=None):
    """X with lvar(X) = Z, for unramified Z.

    Solved by repeatedly cancelling the leading residual term: a term
    Q e^(-λz) added to X shifts lvar by (Δ^λ Q) e^(-λz) plus flatter
    corrections, so each step inverts a (possibly twisted) difference
    operator.  ``section`` maps exponents to the free additive constant
    of integer-exponent solves (default: zero constant term).
    """
    tol = eps()
    validity = Z.validity
    if not is_unramified_derivation(Z):
        # Extended mode: accept any Z whose integer slots are handled by Δ
        # and non-integer slots by the twisted operator (always invertible).
        pass
    X = NilpotentDerivation.zero(validity)
    for _ in range(400):
        resid = Z - lvar(X)
        lead = None
        for lam, p in resid.terms:
            if p.max_abs() > tol * max(gmpy2.mpfr(1), Z.polexp().max_abs()):
                lead = (lam, p)
                break
        if lead is None:
            return X
        lam, q = lead
        integer, _k = _near_integer(lam, tol)
        if integer:
            const = 0
            if section is not None:
                const = section(lam) if callable(section) else section.get(_k, 0)
            p = solve_delta(q, to_mpc(const))
        else:
            p = solve_twisted_delta(q, lam)
        X = X + NilpotentDerivation([(lam, p)], validity)
    raise NoConvergence("variation inversion did not converge")


# ---------------------------------------------------------------------------
# Conjugation by unramified germs and normal forms
# ---------------------------------------------------------------------------


def conj_derivation(X, g):
    """Conjugate of X by the germ g:  X^g = V(g^{-1}(z))·g'(g^{-1}(z)) ∂.

    Consistent with conj_tau (g = τ) and with Exp(X^g) being the pipeline
    conjugate g^{-1}·(Exp X)·g of the exponential germ.
    """
    from .series import invert, substitute_tail

    validity = min(X.validity, g.validity / g.a)
    h = invert(g)
    V_h = substitute_tail(X.polexp(), h, validity)
    gp = g.deriv_polexp()
    gp_h = PolExp(((mpfr(0), Poly([g.a])),)) + substitute_tail(
        PolExp(gp.tail().terms), h, validity
    )
    return NilpotentDerivation.from_polexp(V_h.mul(gp_h, validity), validity)


def _model_derivation(k, mu, validity):
    """−2πi e^(-kz)/(1+μ e^(-kz)) ∂ expanded to the validity exponent."""
    t = two_pi_i()
    terms = []
    m = 1
    while m * k <= validity:
        terms.append((mpfr(m * k), Poly([-t * (-to_mpc(mu)) ** (m - 1)])))
        m += 1
    return NilpotentDerivation(terms, validity)


def normal_form_unramified(Z):
    """Reduce an unramified derivation to −2πi e^(-kz)/(1+μ e^(-kz))∂ + o(e^(-3kz)).

    Returns (conjugator g, leading order k, residue μ, remainder), where the
    remainder is the part of Z^g beyond the model, flatter than 3k (or beyond
    the validity).  The pair (k, μ) is a conjugation invariant.
    """
    tol = eps()
    if Z.is_zero():
        raise ZeroDerivation("cannot normalize the zero derivation")
    if not is_unramified_derivation(Z):
        raise NotUnramified("normal form requires an unramified derivation")
    validity = Z.validity
    scale = Z.polexp().max_abs()
    lead = next(
        (lam, p) for lam, p in Z.terms if p.max_abs() > tol * max(gmpy2.mpfr(1), scale)
    )
    k = int(gmpy2.rint(lead[0]))
    c_k = lead[1][0]
    t = two_pi_i()

    # Translation normalizing the leading coefficient to −2πi: the conjugate
    # of c e^(-kz)∂ by z+b carries c to c·e^(kb).
    b = gmpy2.log(-t / c_k) / k
    g = ds.DulacSeries(1, b, (), validity)
    Zg = conj_derivation(Z, g)

    horizon = min(validity, mpfr(3 * k))
    # Eliminate non-resonant coefficients ascending; the slot at 2k is the
    # resonant residue μ.  Conjugating by Exp(b_j e^(-jz)∂) moves the
    # coefficient at k+j by ±2πi·b_j·(j−k) at leading order; the sign is
    # checked on the actual conjugate so the step is self-correcting.
    j = 1
    while k + j <= horizon:
        if j == k:
            j += 1
            continue
        mu_cur = _current_mu(Zg, k)
        model = _model_derivation(k, mu_cur, horizon)
        resid = (Zg.polexp() - model.polexp()).truncate(horizon)
        cj = _slot_constant(resid, k + j, tol)
        if cj is not None and abs(cj) > tol * max(gmpy2.mpfr(1), scale):
            bj = -cj / (t * (j - k))
            done = False
            for cand in (bj, -bj):
                w = NilpotentDerivation([(mpfr(j), Poly([cand]))], validity)
                gj = exp_derivation(w)
                Zt = conj_derivation(Zg, gj)
                r2 = (
                    Zt.polexp() - _model_derivation(k, _current_mu(Zt, k), horizon).polexp()
                ).truncate(horizon)
                c2 = _slot_constant(r2, k + j, tol)
                if c2 is None or abs(c2) < abs(cj) / 2:
                    Zg = Zt
                    g = ds.compose(gj, g)  # pipeline: apply g, then gj
                    done = True
                    break
            if done:
                continue
            raise NoConvergence("elimination step failed at slot %d" % (k + j))
        j += 1
    mu = _current_mu(Zg, k)
    model = _model_derivation(k, mu, validity)
    remainder = NilpotentDerivation.from_polexp(
        (Zg.polexp() - model.polexp()).truncate(validity), validity
    )
    # Everything the reduction promises to clear must actually be flat.
    rem_low = remainder.polexp().truncate(horizon)
    if rem_low.max_abs() > (tol * 100) * max(gmpy2.mpfr(1), scale):
        raise NoConvergence("normal-form reduction left a low-order residual")
    return g, k, mu, remainder


def _slot_constant(pe, slot, tol):
    for lam, p in pe.terms:
        if abs(lam - slot) <= tol * max(gmpy2.mpfr(1), abs(lam)):
            return p[0]
    return None


def _current_mu(Zg, k):
    """Residue read from the e^(-2kz) slot of a normalized derivation."""
    t = two_pi_i()
    tol = eps()
    c2k = _slot_constant(Zg.polexp(), 2 * k, tol)
    return (c2k / t) if c2k is not None else gmpy2.mpc(0)


def normal_form_mildly_ramified(X):
    """Conjugate a mildly ramified derivation to the two-term normal form.

    Returns (g, k, a, b, μ) with
        X^g = −(z+a) e^(-kz)∂ + ((μ−½)z + b) e^(-2kz)∂ + o(e^(-2kz)),
    where g is the unramified conjugator normalizing lvar(X) and (k, μ)
    are the invariants of lvar(X).
    """
    Z = lvar(X)
    if Z.is_zero():
        raise Unramified("derivation has trivial variation; no ramified normal form")
    g, k, mu, _rem = normal_form_unramified(Z)
    Xg = conj_derivation(X, g)
    tol = eps()
    P = None
    Q = Poly()
    for lam, p in Xg.terms:
        if abs(lam - k) <= tol * max(gmpy2.mpfr(1), abs(lam)):
            P = p
        elif abs(lam - 2 * k) <= tol * max(gmpy2.mpfr(1), abs(lam)):
            Q = p
    if P is None or P.degree != 1:
        raise NoConvergence("normalized derivation has unexpected leading shape")
    a = P[0] / P[1]  # P = P₁·(z + a) with P₁ = −1 in the normal form
    b = Q[0]
    return g, k, a, b, mu


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def derivation_to_json(X):
    return {
        "terms": [
            {
                "lambda": float(l),
                "poly": [[float(c.real), float(c.imag)] for c in p.coeffs],
            }
            for l, p in X.terms
        ],
        "validity": None if X.validity == INF else float(X.validity),
    }


def derivation_from_json(obj):
    validity = obj.get("validity")
    terms = [
        (t["lambda"], Poly([gmpy2.mpc(c[0], c[1]) for c in t["poly"]]))
        for t in obj.get("terms", [])
    ]
    return NilpotentDerivation(terms, INF if validity is None else validity)
