"""Exception hierarchy.

Numerical failures derive from :class:`NumericalError` and input problems from
:class:`ValidationError`; the command line maps them to exit codes 3 and 2.
"""


class IonMagnetError(Exception):
    pass


class ValidationError(IonMagnetError, ValueError):
    """Bad configuration or argument. ``path`` names the offending key if known."""

    def __init__(self, message, path=None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class NumericalError(IonMagnetError, RuntimeError):
    pass


class CoincidentIons(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


class UnstableCrystal(NumericalError):
    pass


class ResonantDetuning(NumericalError):
    pass


class StepNotConverged(NumericalError):
    pass


class TooManySpins(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class BasisMismatch(ValidationError):
    pass
