"""Frequency unit handling.

All physics code works in angular units (rad/s). Files and the command line
speak Hz. :class:`AngularFrequency` is a ``float`` holding rad/s that also
remembers the cyclic value it was built from, so ``from_hz(x).hz == x`` holds
exactly instead of only to within a rounding error of ``2*pi``.
"""

from __future__ import annotations

import math

TWO_PI = 2.0 * math.pi


class AngularFrequency(float):
    """Angular frequency in rad/s.

    Behaves as a plain ``float`` in arithmetic. Results of arithmetic are
    plain floats; only constructors return :class:`AngularFrequency`.
    """

    __slots__ = ("_hz",)

    def __new__(cls, rad_s: float) -> "AngularFrequency":
        value = float(rad_s)
        if not math.isfinite(value):
            raise ValueError(f"angular frequency must be finite, got {rad_s!r}")
        obj = super().__new__(cls, value)
        obj._hz = None
        return obj

    @classmethod
    def from_hz(cls, hz: float) -> "AngularFrequency":
        obj = cls(TWO_PI * float(hz))
        obj._hz = float(hz)
        return obj

    @classmethod
    def from_mhz(cls, mhz: float) -> "AngularFrequency":
        return cls.from_hz(float(mhz) * 1e6)

    @classmethod
    def from_ghz(cls, ghz: float) -> "AngularFrequency":
        return cls.from_hz(float(ghz) * 1e9)

    @property
    def rad_s(self) -> float:
        return float(self)

    @property
    def hz(self) -> float:
        if self._hz is not None:
            return self._hz
        return float(self) / TWO_PI

    @property
    def ghz(self) -> float:
        return self.hz / 1e9

    def __repr__(self) -> str:
        return f"AngularFrequency.from_hz({self.hz!r})"

    def __reduce__(self):
        return (_rebuild, (float(self), self._hz))


def _rebuild(rad_s: float, hz: float | None) -> AngularFrequency:
    obj = AngularFrequency(rad_s)
    obj._hz = hz
    return obj


def to_hz(omega: float) -> float:
    """Cyclic frequency in Hz of an angular frequency."""
    if isinstance(omega, AngularFrequency):
        return omega.hz
    return float(omega) / TWO_PI


def from_hz(hz: float) -> AngularFrequency:
    return AngularFrequency.from_hz(hz)


def ghz(value: float) -> AngularFrequency:
    return AngularFrequency.from_ghz(value)


def mhz(value: float) -> AngularFrequency:
    return AngularFrequency.from_mhz(value)


def khz(value: float) -> AngularFrequency:
    return AngularFrequency.from_hz(float(value) * 1e3)
