"""Model conjugation and centralizers for attracting/repelling Dulac germs.

Every hyperbolic-in-the-chart germ (multiplier a ≠ 1, or a = 1 with
Re b ≠ 0) is conjugate to its affine part by a tangent-to-identity
Dulac series, built order by order from the homological equation and
verified against the composition oracle.  The centralizer of the model
is the one-parameter family of scalings (for a·z) or translations (for
z + b); the decomposition of an arbitrary conjugacy into "canonical
conjugator times centralizer element" is the algebraic skeleton of the
rigidity theorems.
"""

import enum
from dataclasses import dataclass

import gmpy2

from .errors import (Indifferent, NoConvergence, NotSolvable, NotUnramified,
                     PreconditionFailed, ResonanceResidual)
from .poly import Poly
from .polexp import PolExp
from .precision import INF, close, eps, is_small, mpfr, to_mpc
from .series import (Classification, DulacSeries, DynType, classify, compose,
                     gconj, invert, is_mildly_ramified, is_unramified,
                     series_close, variation)


class ModelKind(enum.Enum):
    SCALING = "Scaling"
    TRANSLATION = "Translation"


@dataclass(frozen=True)
class ModelGerm:
    kind: ModelKind
    parameter: object

    def to_series(self, validity=INF):
        if self.kind is ModelKind.SCALING:
            return DulacSeries.affine(self.parameter, 0, validity)
        return DulacSeries.affine(1, self.parameter, validity)

    def __repr__(self):
        return "%s(%s)" % (self.kind.value, complex(to_mpc(self.parameter)))


# ---------------------------------------------------------------------------
# conjugate_to_model
# ---------------------------------------------------------------------------


def _solve_hyperbolic_level(P, lam, b):
    """Q with e^(-λb)·Q(z+b) − Q(z) = −P(z); triangular from the top degree.

    Nonsingular because Re b ≠ 0 makes |e^(-λb)| ≠ 1 for λ > 0.
    """
    c = gmpy2.exp(-to_mpc(lam) * to_mpc(b))
    d = P.degree
    if d < 0:
        return Poly()
    q = [gmpy2.mpc(0)] * (d + 1)
    diag = c - 1
    if is_small(diag):
        raise ResonanceResidual("hyperbolic homological operator degenerated")
    binom = [[gmpy2.mpz(0)] * (d + 1) for _ in range(d + 1)]
    for i in range(d + 1):
        binom[i][0] = gmpy2.mpz(1)
        for j in range(1, i + 1):
            binom[i][j] = binom[i - 1][j - 1] + binom[i - 1][j]
    bb = to_mpc(b)
    for j in range(d, -1, -1):
        acc = -P[j]
        for i in range(j + 1, d + 1):
            acc -= c * q[i] * binom[i][j] * bb ** (i - j)
        q[j] = acc / diag
    return Poly(q)


def _leading_residual(f, phi, model, tol, scale):
    """Leading nonzero term of f∘φ − φ∘model, or None when flat to validity."""
    err = compose(f, phi).full_polexp() - compose(phi, model).full_polexp()
    for lam, p in err.terms:
        if p.max_abs() > tol * scale:
            return lam, p
    return None


def _conjugate_attracting(f):
    """Solve f∘φ = φ∘model order by order, for a > 1 or a = 1, Re b ≠ 0.

    Adding Q e^(-λz) to φ changes the residual at level λ by a·Q(z) in
    the scaling case and by Q(z) − e^(-λb)Q(z+b) in the translation case,
    both invertible; all side effects land at strictly flatter levels
    (exponents λ·a with a > 1, respectively λ + λ').
    """
    validity = f.validity
    a, b = f.a, f.b
    scaling = not close(a, 1)
    if scaling:
        model = DulacSeries.affine(a, 0, validity)
        phi = DulacSeries.affine(1, b / (1 - a), validity)
    else:
        model = DulacSeries.affine(1, b, validity)
        phi = DulacSeries.identity(validity)
    tol = eps()
    scale = max(gmpy2.mpfr(1), f.full_polexp().max_abs())
    for _ in range(600):
        lead = _leading_residual(f, phi, model, tol, scale)
        if lead is None:
            break
        lam, p = lead
        if scaling:
            q = -p * (1 / gmpy2.mpc(a))
        else:
            q = _solve_hyperbolic_level(-p, lam, b)
        new_terms = (PolExp(phi.terms) + PolExp(((mpfr(lam), q),))).terms
        phi = DulacSeries(phi.a, phi.b, new_terms, validity)
    else:
        raise NoConvergence("model conjugation did not terminate")
    kind = ModelKind.SCALING if scaling else ModelKind.TRANSLATION
    return phi, ModelGerm(kind, a if scaling else b)


def conjugate_to_model(f):
    """(phi, model) with invert(phi)∘f∘phi = model, for non-indifferent f.

    The repelling scaling case (a < 1) is reduced to the attracting one
    through the inverse germ, which shares the same conjugator; the
    remaining cases are solved directly by the homological equation.
    """
    cls = classify(f)
    if cls.kind is DynType.INDIFFERENT:
        raise Indifferent("indifferent germs have no affine model in this scope")
    if cls.kind is DynType.SUPER_REPELLING:
        phi, model = _conjugate_attracting(invert(f))
        return phi, ModelGerm(ModelKind.SCALING, 1 / model.parameter)
    return _conjugate_attracting(f)


# ---------------------------------------------------------------------------
# Centralizers
# ---------------------------------------------------------------------------


def centralizer_membership(g, model, tol=None):
    """True iff g commutes with the model up to validity.

    When true, the germ is additionally checked against the closed-form
    centralizer: scalings μ·z for the model a·z, translations z + d for
    the model z + b.
    """
    t = tol or (eps() * 100)
    m = model.to_series(g.validity)
    if not series_close(compose(g, m), compose(m, g), t):
        return False
    # closed-form shape assertions
    tail_small = all(p.max_abs() <= t for _, p in g.terms)
    if model.kind is ModelKind.SCALING:
        ok = tail_small and is_small(g.b, t)
    else:
        ok = tail_small and close(g.a, 1, t)
    if not ok:
        raise ResonanceResidual(
            "germ commutes with the model but is outside the closed-form centralizer"
        )
    return True


# ---------------------------------------------------------------------------
# Rigidity decomposition
# ---------------------------------------------------------------------------


def rigidity_decompose(f, psi):
    """Split a conjugacy ψ of f into a canonical conjugator and a centralizer part.

    With g = ψ⁻¹∘f∘ψ (required to be attracting/repelling of the same
    model as f), the transported canonical conjugator φ = φ_f∘φ_g⁻¹ also
    carries f to g, so c = ψ⁻¹∘φ centralizes g; its conjugate in model
    coordinates is checked against the closed-form centralizer.  Returns
    (φ, c) with ψ = φ∘c⁻¹.
    """
    cls = classify(f)
    if cls.kind is DynType.INDIFFERENT:
        raise PreconditionFailed("indifferent germ: no rigidity decomposition")
    g = compose(invert(psi), compose(f, psi))
    if classify(g).kind is not cls.kind:
        raise PreconditionFailed(
            "psi does not conjugate f to a Dulac series of the same dynamical type"
        )
    phi_f, model_f = conjugate_to_model(f)
    phi_g, model_g = conjugate_to_model(g)
    same = model_f.kind is model_g.kind and close(
        to_mpc(model_f.parameter), to_mpc(model_g.parameter), eps() * 100
    )
    if not same:
        raise PreconditionFailed("conjugate germ has a different affine model")
    phi = compose(phi_f, invert(phi_g))
    c = compose(invert(psi), phi)
    c_model = compose(invert(phi_g), compose(c, phi_g))
    if not centralizer_membership(c_model, model_g):
        raise PreconditionFailed("decomposition factor is not a centralizer element")
    if is_unramified(psi) and not is_unramified(c):
        raise PreconditionFailed("unramified conjugacy produced a ramified factor")
    return phi, c


# ---------------------------------------------------------------------------
# Variation/conjugation compatibility
# ---------------------------------------------------------------------------


def variation_group_conjugation_check(f, g, tol=None):
    """var(g⁻¹fg) = g⁻¹·var(f)·g (and the inverse counterpart) for unramified g."""
    if not is_unramified(g):
        raise NotUnramified("conjugation check requires an unramified conjugator")
    t = tol or (eps() * 100)
    lhs = variation(gconj(f, g))
    rhs = gconj(variation(f), g)
    if not series_close(lhs, rhs, t):
        return False
    lhs2 = variation(invert(gconj(f, g)))
    rhs2 = gconj(variation(invert(f)), g)
    return series_close(lhs2, rhs2, t)
