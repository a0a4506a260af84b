"""Gaussian-error-function control pulse envelopes.

All pulses share the rate r = 35/T.  Middle pulses have nominal width
w = 0.355*T (0.85*T for the basic two-qubit gate); start and end pulses
are single error functions pinned to 1 at t=0 and t=T respectively.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import erf

__all__ = ["Envelope", "constant", "middle", "start", "end", "pulse_sum"]

RATE_FACTOR = 35.0
MIDDLE_WIDTH_FACTOR = 0.355


@dataclass(frozen=True)
class Envelope:
    kind: str  # constant | middle | start | end | sum
    T: float = 1.0
    t_j: float = 0.0
    width: float | None = None
    children: tuple["Envelope", ...] = ()

    def value(self, t):
        """Envelope value at time(s) t in ns."""
        t = np.asarray(t, dtype=float)
        if self.kind == "constant":
            return np.ones_like(t)
        if self.kind == "sum":
            return sum(c.value(t) for c in self.children)
        r = RATE_FACTOR / self.T
        w = self.width if self.width is not None else MIDDLE_WIDTH_FACTOR * self.T
        if self.kind == "middle":
            return (erf(r * (t - self.t_j + w / 2)) + erf(r * (-t + self.t_j + w / 2))) / 2
        if self.kind == "start":
            return (1.0 + erf(r * (-t + w / 2))) / 2
        if self.kind == "end":
            return (erf(r * (t - self.T + w / 2)) + 1.0) / 2
        raise ValueError(f"unknown envelope kind {self.kind!r}")

    def integral(self, t0: float = 0.0, t1: float | None = None) -> float:
        """Time integral of the envelope over [t0, t1] (default [0, T])."""
        if t1 is None:
            t1 = self.T
        if self.kind == "constant":
            return t1 - t0
        if self.kind == "sum":
            return sum(c.integral(t0, t1) for c in self.children)
        val, _ = quad(lambda t: float(self.value(t)), t0, t1, limit=200)
        return val


def constant(T: float = 1.0) -> Envelope:
    return Envelope("constant", T)


def middle(T: float, t_j: float, width: float | None = None) -> Envelope:
    return Envelope("middle", T, t_j=t_j, width=width)


def start(T: float) -> Envelope:
    return Envelope("start", T)


def end(T: float) -> Envelope:
    return Envelope("end", T)


def pulse_sum(*parts: Envelope) -> Envelope:
    if not parts:
        raise ValueError("sum envelope needs at least one part")
    return Envelope("sum", parts[0].T, children=tuple(parts))
