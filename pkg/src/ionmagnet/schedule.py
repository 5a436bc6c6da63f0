"""Transverse-field ramp ``B(t) = b0 / (1 + alpha t)`` at fixed couplings."""

from dataclasses import dataclass

import numpy as np

from .exceptions import ValidationError

TWO_PI = 2 * np.pi
DEFAULT_DURATION = 300e-6
DEFAULT_END_FRACTION = 0.05


@dataclass(frozen=True)
class RampSchedule:
    """Field profile in rad/s over ``[0, duration]`` seconds.

    ``direction="reversed"`` plays the forward profile backwards,
    ``B_rev(t) = B(duration - t)``, which is the ramp-back leg of the
    time-reversal probe.
    """

    b0: float
    alpha: float
    duration: float
    direction: str = "forward"

    def __post_init__(self):
        for name in ("b0", "alpha", "duration"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValidationError(f"must be finite and > 0, got {v!r}", name)
        if self.direction not in ("forward", "reversed"):
            raise ValidationError("direction must be 'forward' or 'reversed'", "direction")

    @classmethod
    def from_end_fraction(cls, b0, duration=DEFAULT_DURATION, end_fraction=DEFAULT_END_FRACTION):
        """Choose alpha so that ``B(duration) = end_fraction * b0``."""
        if not 0 < end_fraction < 1:
            raise ValidationError("must lie in (0, 1)", "b_end_fraction")
        return cls(b0, (1.0 / end_fraction - 1.0) / duration, duration)

    @property
    def hold_j_constant(self):
        return True

    @property
    def end_fraction(self):
        return 1.0 / (1.0 + self.alpha * self.duration)

    def field(self, t):
        t = np.asarray(t, dtype=float)
        if self.direction == "reversed":
            t = self.duration - t
        return self.b0 / (1.0 + self.alpha * t)

    def mirrored(self):
        return RampSchedule(self.b0, self.alpha, self.duration,
                            "reversed" if self.direction == "forward" else "forward")

    def stretched(self, factor):
        """Same start and end fields over ``factor`` times the duration."""
        return RampSchedule(self.b0, self.alpha / factor, self.duration * factor, self.direction)

    def to_dict(self):
        return {"b0": self.b0, "alpha": self.alpha, "duration": self.duration, "direction": self.direction}

    @classmethod
    def from_dict(cls, d):
        return cls(float(d["b0"]), float(d["alpha"]), float(d["duration"]), d.get("direction", "forward"))
