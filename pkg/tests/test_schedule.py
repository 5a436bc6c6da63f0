import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ionmagnet.exceptions import ValidationError
from ionmagnet.schedule import RampSchedule


def test_end_fraction_sets_alpha():
    s = RampSchedule.from_end_fraction(10.0, 300e-6, 0.05)
    assert s.field(0.0) == pytest.approx(10.0)
    assert s.field(300e-6) == pytest.approx(0.5)
    assert s.end_fraction == pytest.approx(0.05)
    assert s.hold_j_constant


@given(f=st.floats(0.001, 0.99), t=st.floats(0.0, 1.0))
def test_mirror_is_time_reflection(f, t):
    s = RampSchedule.from_end_fraction(3.0, 1.0, f)
    assert s.mirrored().field(t) == pytest.approx(s.field(1.0 - t), rel=1e-12)
    assert s.mirrored().mirrored() == s


def test_stretch_keeps_endpoints():
    s = RampSchedule.from_end_fraction(3.0, 2.0, 0.1)
    s10 = s.stretched(10)
    assert s10.duration == 20.0
    assert s10.field(20.0) == pytest.approx(s.field(2.0))
    assert s10.field(10.0) == pytest.approx(s.field(1.0))


def test_validation():
    with pytest.raises(ValidationError, match="b0"):
        RampSchedule(0.0, 1.0, 1.0)
    with pytest.raises(ValidationError, match="b_end_fraction"):
        RampSchedule.from_end_fraction(1.0, 1.0, 1.5)
    with pytest.raises(ValidationError, match="direction"):
        RampSchedule(1.0, 1.0, 1.0, "sideways")


def test_round_trip():
    s = RampSchedule.from_end_fraction(2 * np.pi * 29e3, 300e-6, 0.05).mirrored()
    assert RampSchedule.from_dict(s.to_dict()) == s
