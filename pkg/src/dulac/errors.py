"""Exception hierarchy shared across the library."""


class DulacError(Exception):
    """Base class for all library-specific failures."""


class ParseError(DulacError):
    def __init__(self, message, position=None, expected=None):
        self.position = position
        self.expected = expected
        detail = message
        if position is not None:
            detail += " at position %d" % position
        if expected:
            detail += " (expected %s)" % expected
        super().__init__(detail)


class NoConvergence(DulacError):
    """An iterative solve failed to converge."""


class NotTangent(DulacError):
    """Series is not tangent to the identity (multiplier 1, constant 0)."""


class NotUnramified(DulacError):
    """Operation requires an unramified series/derivation."""


class NotMildlyRamified(DulacError):
    """Operation requires a mildly ramified series."""


class NotTangentToIdentity(DulacError):
    """Diffeo germ is not tangent to the identity."""


class NotSolvable(DulacError):
    """A difference-operator solve has no solution."""


class ZeroDerivation(DulacError):
    """Normal form of the zero derivation is undefined."""


class Unramified(DulacError):
    """Derivation has vanishing leading variation; no ramified normal form."""


class Indifferent(DulacError):
    """Indifferent germs are outside the attracting/repelling machinery."""


class ResonanceResidual(DulacError):
    """A homological solve degenerated beyond tolerance."""


class PreconditionFailed(DulacError):
    """A documented precondition was violated; message names the clause."""


class LiftExited(DulacError):
    """A path lift left the working region; carries the failing clause."""

    def __init__(self, clause, t=None, z=None):
        self.clause = clause
        self.t = t
        self.z = z
        msg = "lift exited the working region: %s" % clause
        if t is not None:
            msg += " (t=%.6g)" % t
        super().__init__(msg)


class StepUnderflow(DulacError):
    """The adaptive integrator step collapsed below the minimum."""


class RadiusExceeded(DulacError):
    """A germ was evaluated outside its radius of reliability."""


class DeterminationMismatch(DulacError):
    """The two determination formulas disagree beyond tolerance."""


class FitIllConditioned(DulacError):
    """Least-squares germ fit is too ill-conditioned to trust."""


class BadParameters(DulacError):
    """Arithmetic preconditions on integer parameters failed."""


class ConfigInvalid(DulacError):
    """Experiment configuration file is malformed."""
