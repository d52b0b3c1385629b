"""Numeric laboratory for prepared saddle foliations.

A prepared saddle is the foliation  x dy + λy(1 + xⁿy K(x,y)) dx = 0
on the λ-adapted region U_{A,B} = {|y||x|^λ ≤ A, |x| ≤ 1, |y| ≤ B},
with sup|K| ≤ ε and εB < 1.  All integration happens in the covering
chart x = e^(-z), y = e^(-w) using the quasi-first integral φ = w + λz,
which obeys  dφ/dz = −λ e^(−((n−λ)z+φ)) K(e^(-z), e^(-w));  the right
side is exponentially small, so the two-sided estimate
    e^(Re φ₀) − λε·length ≤ e^(Re φ) ≤ e^(Re φ₀) + λε·length
controls every lift.  Corner transitions are computed by lifting
reversed exponential guiding paths ξ_{α,C}(t) = t + iC(e^(αt) − 1)
from the Σ = {y=1} transversal to the Ω = {x=1} transversal; the
holonomies are lifts of the two separatrix circles.
"""

import cmath
import math
from dataclasses import dataclass, field

from .errors import (BadParameters, LiftExited, PreconditionFailed,
                     RadiusExceeded, StepUnderflow)

TWO_PI = 2 * math.pi


# ---------------------------------------------------------------------------
# Prepared saddles
# ---------------------------------------------------------------------------


class PreparedSaddle:
    """Prepared saddle data; the |K| ≤ ε bound is grid-checked at build time.

    ``K`` maps (i, j) exponent pairs to complex coefficients of xⁱyʲ.
    """

    __slots__ = ("lam", "n", "K", "eps", "A", "B")

    def __init__(self, lam, n, K=None, eps=0.0, A=1.0, B=1.0, grid=8):
        lam = float(lam)
        n = int(n)
        if lam <= 0:
            raise BadParameters("eigenratio must be positive")
        if n < max(1, math.floor(lam)):
            raise BadParameters("n must satisfy n >= floor(lambda), n >= 1")
        if A <= 0 or B <= 0:
            raise BadParameters("A and B must be positive")
        if eps < 0:
            raise BadParameters("eps must be nonnegative")
        if eps * B >= 1:
            raise BadParameters("prepared saddle requires eps*B < 1")
        self.lam = lam
        self.n = n
        self.K = {k: complex(v) for k, v in (K or {}).items() if v != 0}
        self.eps = float(eps)
        self.A = float(A)
        self.B = float(B)
        self._check_bound(grid)

    def _check_bound(self, grid):
        if not self.K:
            if self.eps == 0.0:
                return
            return  # a zero K trivially satisfies any eps bound
        worst = 0.0
        for ir in range(grid + 1):
            r1 = ir / grid  # |x| <= 1
            for jr in range(grid + 1):
                r2 = jr / grid * self.B  # |y| <= B
                if r2 * r1**self.lam > self.A + 1e-12:
                    continue
                for ia in range(grid):
                    for ja in range(grid):
                        x = r1 * cmath.exp(2j * math.pi * ia / grid)
                        y = r2 * cmath.exp(2j * math.pi * ja / grid)
                        worst = max(worst, abs(self.K_eval(x, y)))
        if worst > self.eps * (1 + 1e-9):
            raise BadParameters(
                "sampled |K| = %.6g exceeds the declared bound eps = %.6g"
                % (worst, self.eps)
            )

    def K_eval(self, x, y):
        acc = 0j
        for (i, j), c in self.K.items():
            acc += c * x**i * y**j
        return acc

    def in_region(self, z, w, safety=1.0):
        """The three log-chart inequalities defining U_{A,B}; returns the
        name of the first violated clause, or None."""
        slack = math.log(safety) if safety < 1 else 0.0
        if z.real < slack:
            return "Re z >= 0"
        if w.real + self.lam * z.real < -math.log(self.A) + slack:
            return "Re w + lambda Re z >= -log A"
        if w.real < -math.log(self.B) + slack:
            return "Re w >= -log B"
        return None

    def phi_rhs(self, z, phi):
        """dφ/dz for the lifted foliation."""
        if not self.K:
            return 0j
        w = phi - self.lam * z
        k = self.K_eval(cmath.exp(-z), cmath.exp(-w))
        return -self.lam * cmath.exp(-((self.n - self.lam) * z + phi)) * k

    def z_rhs(self, w, z):
        """dz/dw along the foliation (used for the Σ holonomy)."""
        x = cmath.exp(-z)
        y = cmath.exp(-w)
        denom = 1 + x**self.n * y * self.K_eval(x, y)
        return -1 / (self.lam * denom)


# ---------------------------------------------------------------------------
# Path specifications in the z covering chart
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Radial:
    """γ(t) = z0 + t, t ∈ [0, T]; z0 = −log x0 with |x0| = 1."""

    x0: complex
    T: float

    def z0(self):
        return -cmath.log(self.x0)

    def param(self):
        z0 = self.z0()
        return (0.0, float(self.T)), (lambda t: z0 + t), (lambda t: 1.0 + 0j)


@dataclass(frozen=True)
class Circular:
    """γ(t) = z0 + i·t, t from 0 to T (T may be negative for orientation)."""

    T: float
    z0: complex = 0j

    def param(self):
        z0 = complex(self.z0)
        return (0.0, float(self.T)), (lambda t: z0 + 1j * t), (lambda t: 1j)


@dataclass(frozen=True)
class Exponential:
    """Reversed guiding path: from ξ_{α,C}(T) back to ξ_{α,C}(0) = 0.

    ξ_{α,C}(t) = t + iC(e^(αt) − 1) with C ∈ {−1, +1} and 0 ≤ α < λ.
    """

    alpha: float
    C: int
    T: float

    def validate(self, lam):
        if self.C not in (-1, 1):
            raise BadParameters("exponential path requires C in {-1, +1}")
        if not (0 <= self.alpha < lam):
            raise BadParameters("exponential path requires 0 <= alpha < lambda")

    def xi(self, t):
        return t + 1j * self.C * (math.exp(self.alpha * t) - 1)

    def param(self):
        a, C, T = self.alpha, self.C, float(self.T)

        def gamma(t):  # runs backwards along the trajectory
            s = T - t
            return s + 1j * C * (math.exp(a * s) - 1)

        def dgamma(t):
            s = T - t
            return -(1 + 1j * C * a * math.exp(a * s))

        return (0.0, T), gamma, dgamma


@dataclass(frozen=True)
class Polyline:
    """Straight segments through the given z vertices."""

    points: tuple

    def param(self):
        pts = [complex(p) for p in self.points]
        if len(pts) < 2:
            raise BadParameters("polyline needs at least two points")
        lens = [abs(b - a) for a, b in zip(pts, pts[1:])]
        total = sum(lens)
        cum = [0.0]
        for L in lens:
            cum.append(cum[-1] + L)

        def gamma(t):
            t = min(max(t, 0.0), total)
            for i, (a, b) in enumerate(zip(pts, pts[1:])):
                if t <= cum[i + 1] or i == len(pts) - 2:
                    u = 0.0 if lens[i] == 0 else (t - cum[i]) / lens[i]
                    return a + u * (b - a)
            return pts[-1]

        def dgamma(t):
            for i in range(len(pts) - 1):
                if t <= cum[i + 1] or i == len(pts) - 2:
                    if lens[i] == 0:
                        return 0j
                    return (pts[i + 1] - pts[i]) / lens[i]
            return 0j

        return (0.0, total), gamma, dgamma


# ---------------------------------------------------------------------------
# Embedded Dormand–Prince 5(4) on a complex scalar state
# ---------------------------------------------------------------------------

_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_DP_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_DP_B4 = (
    5179 / 57600,
    0.0,
    7571 / 16695,
    393 / 640,
    -92097 / 339200,
    187 / 2100,
    1 / 40,
)

MIN_STEP = 1e-14


def _integrate(fun, t0, t1, y0, rtol=1e-10, atol=1e-12, on_step=None):
    """Adaptive RK45 for a complex scalar ODE y' = fun(t, y) on [t0, t1].

    ``on_step(t, y, h)`` runs after each accepted step and may raise to
    abort.  Returns the final value.
    """
    direction = 1.0 if t1 >= t0 else -1.0
    span = abs(t1 - t0)
    if span == 0:
        return y0
    t, y = t0, y0
    h = direction * min(span, max(span / 100, 1e-3))
    while direction * (t1 - t) > 0:
        if abs(h) > abs(t1 - t):
            h = t1 - t
        if abs(h) < MIN_STEP:
            raise StepUnderflow("adaptive step fell below 1e-14 at t=%g" % t)
        k = [fun(t, y)]
        for i in range(1, 7):
            yi = y + h * sum(a * kk for a, kk in zip(_DP_A[i], k))
            k.append(fun(t + _DP_C[i] * h, yi))
        y5 = y + h * sum(b * kk for b, kk in zip(_DP_B5, k))
        y4 = y + h * sum(b * kk for b, kk in zip(_DP_B4, k))
        err = abs(y5 - y4)
        tol = atol + rtol * max(abs(y), abs(y5))
        if err <= tol or abs(h) <= MIN_STEP * 2:
            t += h
            y = y5
            if on_step is not None:
                on_step(t, y, abs(h))
        factor = 0.9 * (tol / err) ** 0.2 if err > 0 else 5.0
        h *= min(5.0, max(0.2, factor))
    return y


_GL4_NODES = (
    0.5 - math.sqrt(3 / 7 + 2 / 7 * math.sqrt(6 / 5)) / 2,
    0.5 - math.sqrt(3 / 7 - 2 / 7 * math.sqrt(6 / 5)) / 2,
    0.5 + math.sqrt(3 / 7 - 2 / 7 * math.sqrt(6 / 5)) / 2,
    0.5 + math.sqrt(3 / 7 + 2 / 7 * math.sqrt(6 / 5)) / 2,
)
_GL4_W = (
    (18 - math.sqrt(30)) / 72,
    (18 + math.sqrt(30)) / 72,
    (18 + math.sqrt(30)) / 72,
    (18 - math.sqrt(30)) / 72,
)


def _arc_increment(dgamma, t, h):
    """Arc length of γ over [t−h, t] by 4-point Gauss–Legendre."""
    return h * sum(w * abs(dgamma(t - h + u * h)) for u, w in zip(_GL4_NODES, _GL4_W))


def _band_increment(gamma, dgamma, t, h, s_exp):
    """∫ e^(-s·Re γ) |γ'| over [t−h, t]: the exact drift-bound integrand.

    For n ≥ λ this is at most the arc length, recovering the usual
    λ·ε·length bound; for floor(λ) ≤ n < λ it is the correct replacement.
    """
    return h * sum(
        w * abs(dgamma(t - h + u * h)) * math.exp(-s_exp * gamma(t - h + u * h).real)
        for u, w in zip(_GL4_NODES, _GL4_W)
    )


# ---------------------------------------------------------------------------
# Path lifting with the dual exit policy
# ---------------------------------------------------------------------------


@dataclass
class LiftResult:
    samples: list
    length: float
    exited: bool
    clause: str = None
    disagreements: list = field(default_factory=list)
    estimate_ok: bool = True
    final_phi: complex = None
    final_z: complex = None
    band: float = 0.0  # accumulated λ·ε·∫e^(-(n-λ)Re z)|dz| drift bound


def lift_path(s, path, w0, rtol=1e-10, raise_on_exit=False):
    """Lift a base path through (γ(0), w0), integrating φ along γ.

    Exits when one of the region inequalities fails (reactive check,
    with safety factor 0.99) or when the length-based lower bound
    predicts failure (predictive check); disagreements between the two
    policies are recorded, not fatal.
    """
    if isinstance(path, Exponential):
        path.validate(s.lam)
    (t0, t1), gamma, dgamma = path.param()
    z0 = gamma(t0)
    w0 = complex(w0)
    clause = s.in_region(z0, w0)
    if clause is not None:
        raise PreconditionFailed("initial point outside U_{A,B}: " + clause)
    phi0 = w0 + s.lam * z0
    state = LiftResult(samples=[(z0, phi0)], length=0.0, exited=False)
    exp_phi0 = math.exp(phi0.real)

    class _Exit(Exception):
        pass

    s_exp = s.n - s.lam

    def on_step(t, phi, h):
        z = gamma(t)
        w = phi - s.lam * z
        state.length += _arc_increment(dgamma, t, h)
        state.band += s.lam * s.eps * _band_increment(gamma, dgamma, t, h, s_exp)
        state.samples.append((z, phi))
        reactive = s.in_region(z, w, safety=0.99)
        lower = exp_phi0 - state.band
        bound = 0.99 * max(1 / s.A, math.exp(s.lam * z.real) / s.B)
        predictive = None
        if z.real < 0:
            predictive = "Re z >= 0"
        elif lower < bound:
            predictive = "length bound: e^{Re phi0} - lam*eps*length >= max(1/A, e^{lam Re z}/B)"
        if (reactive is None) != (predictive is None):
            state.disagreements.append((t, reactive, predictive))
        # Prop-estimate bookkeeping (two-sided, with integrator margin)
        margin = 10 * rtol * max(1.0, exp_phi0)
        e = math.exp(phi.real)
        if not (exp_phi0 - state.band - margin <= e
                <= exp_phi0 + state.band + margin):
            state.estimate_ok = False
        if reactive is not None:
            state.exited = True
            state.clause = reactive
            raise _Exit()
        if predictive is not None:
            state.exited = True
            state.clause = predictive
            raise _Exit()

    def rhs(t, phi):
        return s.phi_rhs(gamma(t), phi) * dgamma(t)

    try:
        phi_end = _integrate(rhs, t0, t1, phi0, rtol=rtol, on_step=on_step)
    except _Exit:
        phi_end = state.samples[-1][1]
    state.final_z, state.final_phi = state.samples[-1][0], phi_end
    if state.exited and raise_on_exit:
        raise LiftExited(state.clause, None, state.final_z)
    return state


# ---------------------------------------------------------------------------
# Corner transition
# ---------------------------------------------------------------------------


def _guiding_path(s, z):
    """The exponential guiding path ending at z = ξ_{α,C}(T)."""
    z = complex(z)
    T = z.real
    if T <= 0:
        raise PreconditionFailed("corner samples need Re z > 0")
    if z.imag == 0:
        return Exponential(alpha=0.0, C=1, T=T)
    C = 1 if z.imag > 0 else -1
    alpha = math.log(1 + abs(z.imag)) / T
    if alpha >= s.lam:
        raise PreconditionFailed(
            "sample outside the guiding family: alpha = %.4g >= lambda" % alpha
        )
    return Exponential(alpha=alpha, C=C, T=T)


def _check_sigma_estimate(s, z):
    sigma = math.exp(-complex(z).real)
    bound = 1 / (max(1 / (s.A * (1 + math.pi)), 1 / s.B) + 2 * s.eps)
    if sigma > bound:
        raise PreconditionFailed(
            "base point |sigma| = %.4g violates the lifting bound %.4g"
            % (sigma, bound)
        )


def corner_map_numeric(s, z_samples, rtol=1e-10):
    """Canonical corner transition d(z) at each sample.

    Each z is joined to 0 by the reversed exponential guiding path; the
    lift starts on Σ = {y = 1} (w₀ = 0, φ₀ = λz) and d(z) is the final
    φ at the Ω endpoint x = 1.  Continuous integration keeps the branch,
    and φ₀ = λz pins the canonical determination d(z) = λz + o(1).
    """
    out = []
    for z in z_samples:
        z = complex(z)
        _check_sigma_estimate(s, z)
        path = _guiding_path(s, z)
        # α = 0 degenerates ξ to the radial segment; handle directly.
        if path.alpha == 0.0:
            seg = Polyline(points=(z, 0j))
            res = lift_path(s, seg, 0j, rtol=rtol, raise_on_exit=True)
        else:
            res = lift_path(s, path, 0j, rtol=rtol, raise_on_exit=True)
        out.append((z, res.final_phi))
    return out


# ---------------------------------------------------------------------------
# Holonomies
# ---------------------------------------------------------------------------


def holonomy_numeric(s, which, start, laps=1, rtol=1e-10):
    """Saddle holonomy on a transversal: Ω = {x=1} in y, Σ = {y=1} in x.

    ``laps`` counts positively oriented circuits (negative for the
    inverse).  The positively oriented circle x = e^(2πit) is the
    z-path −2πit; on the Σ side the y-circle gives the w-path −2πit,
    integrated through dz/dw.
    """
    if which not in ("Omega", "Sigma"):
        raise BadParameters("holonomy transversal must be 'Omega' or 'Sigma'")
    start = complex(start)
    if laps == 0:
        return start
    if which == "Omega":
        w0 = -cmath.log(start)  # principal branch on Ω
        path = Circular(T=-TWO_PI * laps, z0=0j)
        res = lift_path(s, path, w0, rtol=rtol, raise_on_exit=True)
        w_end = res.final_phi - s.lam * res.final_z
        return cmath.exp(-w_end)
    # Sigma: integrate z as a function of w along w(t) = −2πi·t·laps
    z0 = -cmath.log(start)
    clause = s.in_region(z0, 0j)
    if clause is not None:
        raise PreconditionFailed("start outside U_{A,B}: " + clause)

    state = {"z": z0}

    class _Exit(Exception):
        pass

    def on_step(t, z, h):
        w = -2j * math.pi * laps * t
        clause = s.in_region(z, w, safety=0.99)
        if clause is not None:
            raise LiftExited(clause, t, z)

    def rhs(t, z):
        w = -2j * math.pi * laps * t
        return s.z_rhs(w, z) * (-2j * math.pi * laps)

    z_end = _integrate(rhs, 0.0, 1.0, z0, rtol=rtol, on_step=on_step)
    return cmath.exp(-z_end)


# ---------------------------------------------------------------------------
# Poincaré map and determinations
# ---------------------------------------------------------------------------


def _germ_radius(R):
    """Crude reliability radius for a truncated germ: where the top term
    is still a small correction."""
    worst = 0.0
    for nidx in range(2, R.order + 1):
        c = abs(complex(R[nidx]))
        if c > 0:
            worst = max(worst, c ** (1.0 / (nidx - 1)))
    return 0.5 if worst == 0 else min(0.5, 0.5 / worst)


def poincare_numeric(s, R, x_samples, rtol=1e-10):
    """P(x) = R(D(x)) in the x-chart: numeric corner then the gluing germ."""
    zs = [-cmath.log(complex(x)) for x in x_samples]
    corners = corner_map_numeric(s, zs, rtol=rtol)
    radius = _germ_radius(R)
    out = []
    for x, (z, d) in zip(x_samples, corners):
        y = cmath.exp(-d)
        if abs(y) > radius:
            raise RadiusExceeded(
                "corner output |y| = %.4g beyond the germ radius %.4g"
                % (abs(y), radius)
            )
        out.append((complex(x), complex(R.eval(y))))
    return out


def h_omega_lift(s, w, n=1, rtol=1e-10):
    """The canonical covering-chart lift h_Ω^n applied to w.

    h_Ω(w) = w + 2πi(1−λ) + o(1): one negatively oriented lap of the
    Ω circle tracked continuously in w, followed by the deck shift +2πi.
    """
    w = complex(w)
    for _ in range(abs(int(n))):
        sgn = 1 if n > 0 else -1
        path = Circular(T=sgn * TWO_PI, z0=0j)  # z: 0 -> +2πi for h_Ω itself
        res = lift_path(s, path, w, rtol=rtol, raise_on_exit=True)
        w = res.final_phi - s.lam * res.final_z + sgn * 2j * math.pi
    return w


def h_sigma_lift(s, z, n=1, rtol=1e-10):
    """The canonical covering-chart lift h_Σ^n applied to z.

    h_Σ(z) = z + 2πi(1−1/λ) + o(1): one negatively oriented lap of
    the Σ circle tracked continuously in z, followed by +2πi.
    """
    z = complex(z)
    for _ in range(abs(int(n))):
        sgn = 1 if n > 0 else -1
        clause = s.in_region(z, 0j)
        if clause is not None:
            raise PreconditionFailed("point outside U_{A,B}: " + clause)

        def rhs(t, zz, _sgn=sgn):
            w = _sgn * 2j * math.pi * t
            return s.z_rhs(w, zz) * (_sgn * 2j * math.pi)

        def on_step(t, zz, h, _sgn=sgn):
            w = _sgn * 2j * math.pi * t
            clause = s.in_region(zz, w, safety=0.99)
            if clause is not None:
                raise LiftExited(clause, t, zz)

        z = _integrate(rhs, 0.0, 1.0, z, rtol=rtol, on_step=on_step)
        z += sgn * 2j * math.pi
    return z


def determination_shift(s, n, z_samples, rtol=1e-10):
    """n-th determination of the lifted corner map, computed both ways.

    Returns (z, via_omega, via_sigma) triples in the w covering chart:
    h_Ω^(−n)(d₀(z)) versus d₀(h_Σ^n(z)); the two must agree.
    """
    out = []
    for z in z_samples:
        z = complex(z)
        (_, d0) = corner_map_numeric(s, [z], rtol=rtol)[0]
        via_omega = h_omega_lift(s, d0, -n, rtol=rtol) if n else d0
        zn = h_sigma_lift(s, z, n, rtol=rtol) if n else z
        (_, via_sigma) = corner_map_numeric(s, [zn], rtol=rtol)[0]
        out.append((z, via_omega, via_sigma))
    return out
