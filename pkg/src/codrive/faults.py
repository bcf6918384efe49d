"""Fault injection: maps the automation's desired controls to degraded ones.

A profile adds a ramped offset to one control channel: zero before the onset
step, linear ramp up to the plateau over the ramp length, plateau afterwards.
The faulted output is clipped to the actuator's physical range; the untouched
channel passes through unchanged. An optional multiplicative scale factor is
supported as an extension (default 1 = off).
"""
from __future__ import annotations

from dataclasses import dataclass

from .dynamics import ACCEL_MAX, DELTA_MAX, ControlVector

STEERING = "steering"
ACCELERATION = "acceleration"


@dataclass(frozen=True)
class FaultProfile:
    channel: str          # "steering" or "acceleration"
    onset_step: int       # k0
    ramp_steps: int       # steps from onset to full plateau
    plateau: float        # additive offset in channel units
    scale: float = 1.0    # multiplicative factor on the channel, applied before the offset

    def __post_init__(self):
        if self.channel not in (STEERING, ACCELERATION):
            raise ValueError(f"unknown fault channel: {self.channel!r}")
        if self.onset_step < 0:
            raise ValueError("onset_step must be >= 0")
        if self.ramp_steps < 0:
            raise ValueError("ramp_steps must be >= 0")

    def offset_at(self, k: int) -> float:
        if k < self.onset_step:
            return 0.0
        if self.ramp_steps == 0:
            return self.plateau
        frac = (k - self.onset_step) / self.ramp_steps
        return self.plateau * min(1.0, frac)


def _clip(value: float, bound: float) -> float:
    return max(-bound, min(bound, value))


def inject(u_des: ControlVector, k: int, profile: FaultProfile | None) -> ControlVector:
    """Degraded control u_f at step k (u_des itself when no profile is active)."""
    if k < 0:
        raise ValueError("step index must be >= 0")
    if profile is None:
        return u_des
    offset = profile.offset_at(k)
    if profile.channel == STEERING:
        delta = _clip(profile.scale * u_des.delta + offset, DELTA_MAX)
        return ControlVector(a=u_des.a, delta=delta)
    a = _clip(profile.scale * u_des.a + offset, ACCEL_MAX)
    return ControlVector(a=a, delta=u_des.delta)
