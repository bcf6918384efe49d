"""3-DOF dynamic bicycle model with linear tires.

Serves as the plant, as the internal model of both MPCs, and as the one-step
mapping from degraded controls to the trajectory-prediction seed. States are
world-frame position/heading plus body-frame velocities and yaw rate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

# slip-angle formulas divide by v_x; below this floor they are rejected
VX_FLOOR = 0.5

# actuator saturation shared by both agents
DELTA_MAX = 30.0 * math.pi / 180.0  # rad
ACCEL_MAX = 5.0                     # m/s^2


@dataclass(frozen=True)
class VehicleState:
    x: float    # world position (m)
    y: float    # world position (m)
    psi: float  # heading (rad)
    vx: float   # longitudinal speed, body frame (m/s)
    vy: float   # lateral speed, body frame (m/s)
    r: float    # yaw rate (rad/s)

    def as_tuple(self) -> tuple[float, float, float, float, float, float]:
        return (self.x, self.y, self.psi, self.vx, self.vy, self.r)


@dataclass(frozen=True)
class VehicleParams:
    lf: float = 1.21       # CM to front axle (m)
    lr: float = 1.05       # CM to rear axle (m)
    m: float = 2000.0      # mass (kg)
    iz: float = 1300.0     # yaw inertia (kg m^2)
    caf: float = 80000.0   # front cornering stiffness (N/rad)
    car: float = 80000.0   # rear cornering stiffness (N/rad)

    def __post_init__(self):
        for name in ("lf", "lr", "m", "iz", "caf", "car"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"vehicle parameter {name} must be positive")


@dataclass(frozen=True)
class ControlVector:
    a: float      # longitudinal acceleration (m/s^2)
    delta: float  # front steering angle (rad)

    def as_tuple(self) -> tuple[float, float]:
        return (self.a, self.delta)


def derivatives(state: VehicleState, u: ControlVector, params: VehicleParams) -> tuple[float, ...]:
    """Time derivative (xdot, ydot, psidot, vxdot, vydot, rdot).

    Lateral tire forces are linear in slip angle: F_ci = -C_ai * alpha_i with
    alpha_f = (vy + lf*r)/vx - delta and alpha_r = (vy - lr*r)/vx.
    """
    if state.vx < VX_FLOOR:
        raise ValueError(f"vx={state.vx:.3f} below the {VX_FLOOR} m/s floor of the slip-angle model")
    return _deriv_tuple(state.as_tuple(), u.a, u.delta, params)


def _deriv_tuple(s, a, delta, p: VehicleParams):
    x, y, psi, vx, vy, r = s
    alpha_f = (vy + p.lf * r) / vx - delta
    alpha_r = (vy - p.lr * r) / vx
    fcf = -p.caf * alpha_f
    fcr = -p.car * alpha_r
    return (
        vx * math.cos(psi) - vy * math.sin(psi),
        vx * math.sin(psi) + vy * math.cos(psi),
        r,
        r * vy + a,
        -r * vx + (2.0 / p.m) * (fcf * math.cos(delta) + fcr),
        (2.0 / p.iz) * (p.lf * fcf - p.lr * fcr),
    )


def step(state: VehicleState, u: ControlVector, params: VehicleParams, dt: float) -> VehicleState:
    """Advance the state by dt with one fixed-step RK4 integration."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if state.vx < VX_FLOOR:
        raise ValueError(f"vx={state.vx:.3f} below the {VX_FLOOR} m/s floor of the slip-angle model")
    return VehicleState(*rk4_tuple(state.as_tuple(), u.a, u.delta, params, dt))


def rk4_tuple(s, a, delta, params: VehicleParams, dt: float):
    """RK4 over the raw 6-tuple; shared with the MPC rollout kernels."""
    k1 = _deriv_tuple(s, a, delta, params)
    s2 = tuple(s[i] + 0.5 * dt * k1[i] for i in range(6))
    k2 = _deriv_tuple(s2, a, delta, params)
    s3 = tuple(s[i] + 0.5 * dt * k2[i] for i in range(6))
    k3 = _deriv_tuple(s3, a, delta, params)
    s4 = tuple(s[i] + dt * k3[i] for i in range(6))
    k4 = _deriv_tuple(s4, a, delta, params)
    return tuple(
        s[i] + (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) for i in range(6)
    )
