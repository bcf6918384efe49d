"""Constant-turn-rate-and-acceleration forward prediction.

The ego is seeded by one bicycle-model step under the degraded controls, then
propagated over the prediction horizon with the CTRA closed forms. Surrounding
vehicles use the same propagation (they reduce to straight-line advance as
constant-velocity lane keepers). Positions are propagated in whatever locally
Cartesian frame the seed is expressed in; the heading of the returned state is
road-relative (psi* = psi - psi_road), which is what risk assessment consumes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .dynamics import ControlVector, VehicleParams, VehicleState, step


@dataclass(frozen=True)
class CtraState:
    x: float    # position (m)
    y: float    # position (m)
    psi: float  # heading (rad); road-relative after prediction
    v: float    # speed along the body x-axis (m/s)
    a: float    # longitudinal acceleration held constant (m/s^2)
    r: float    # yaw rate held constant (rad/s)


@dataclass(frozen=True)
class PredictionConfig:
    horizon: float = 0.5   # tau_p (s)
    r_eps: float = 1e-4    # yaw-rate magnitude below which the straight-line limit is used

    def __post_init__(self):
        if self.horizon <= 0.0:
            raise ValueError("prediction horizon must be positive")


def seed_from_degraded_control(
    state: VehicleState, u_f: ControlVector, params: VehicleParams, dt: float
) -> CtraState:
    """One bicycle step under the degraded controls -> CTRA seed.

    All seed fields come from the stepped state; the held acceleration is the
    degraded command itself.
    """
    nxt = step(state, u_f, params, dt)
    return CtraState(x=nxt.x, y=nxt.y, psi=nxt.psi, v=nxt.vx, a=u_f.a, r=nxt.r)


def ctra_predict(seed: CtraState, psi_road: float, cfg: PredictionConfig) -> CtraState:
    """Propagate the seed over the horizon with constant yaw rate and acceleration.

    Below cfg.r_eps the 1/r^2 closed form loses ~8 digits, so the exact
    straight-line limit is used instead.
    """
    tau = cfg.horizon
    psi_star = seed.psi - psi_road
    v, a, r = seed.v, seed.a, seed.r
    if abs(r) < cfg.r_eps:
        arc = v * tau + 0.5 * a * tau * tau
        dx = arc * math.cos(psi_star)
        dy = arc * math.sin(psi_star)
    else:
        p0 = psi_star
        p1 = psi_star + tau * r
        inv_r2 = 1.0 / (r * r)
        dx = inv_r2 * (
            (v * r + a * r * tau) * math.sin(p1)
            + a * math.cos(p1)
            - v * r * math.sin(p0)
            - a * math.cos(p0)
        )
        dy = inv_r2 * (
            (-v * r - a * r * tau) * math.cos(p1)
            + a * math.sin(p1)
            + v * r * math.cos(p0)
            - a * math.sin(p0)
        )
    return CtraState(
        x=seed.x + dx,
        y=seed.y + dy,
        psi=psi_star + tau * r,
        v=v + a * tau,
        a=a,
        r=r,
    )


def predict_neighbor(
    position: tuple[float, float], speed: float, cfg: PredictionConfig,
    accel: float = 0.0, yaw_rate: float = 0.0,
) -> tuple[tuple[float, float], float]:
    """Predicted (position, speed) of a surrounding vehicle at the horizon.

    Neighbors are modeled as lane keepers in the road frame, so the heading is
    zero and constant-velocity vehicles reduce to a straight-line advance.
    """
    seed = CtraState(x=position[0], y=position[1], psi=0.0, v=speed, a=accel, r=yaw_rate)
    out = ctra_predict(seed, 0.0, cfg)
    return (out.x, out.y), out.v
