"""Exception hierarchy.

Two families: ``ModelError`` for bad configurations or models that do not
satisfy the local hypotheses (CLI exit code 1), and ``NumericalError`` for
failures met while integrating or root finding (CLI exit code 3).
"""

from __future__ import annotations


class RelayFoldError(Exception):
    """Base class for every error raised by this package."""


class ModelError(RelayFoldError):
    pass


class ConfigError(ModelError):
    pass


class DegenerateJet(ModelError):
    """f'_y(0) or g(0) vanishes (to tol_degenerate) where the theory needs it nonzero."""


class NotFoldFold(ModelError):
    """One of the two fields is not tangent to the switching line at the fold point."""


class NotFold(ModelError):
    pass


class InconclusiveVerdict(ModelError):
    """A prediction was requested but the bifurcation conditions do not hold."""


class NumericalError(RelayFoldError):
    pass


class OutOfBox(NumericalError):
    def __init__(self, state, box):
        self.state = tuple(state)
        self.box = tuple(box)
        super().__init__(f"state {self.state} left the model box {self.box}")


class StepUnderflow(NumericalError):
    pass


class NoCrossing(NumericalError):
    pass


class TangentialCrossing(NumericalError):
    def __init__(self, t, state, speed):
        self.t = t
        self.state = tuple(state)
        self.speed = speed
        super().__init__(
            f"tangential crossing at t={t!r}, state={self.state}, |f|={abs(speed):.3e}"
        )


class NoConvergence(NumericalError):
    pass


class NoSignChange(NumericalError):
    pass


class DomainViolation(NumericalError):
    pass
