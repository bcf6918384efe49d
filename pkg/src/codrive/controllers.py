"""Automation and driver controllers.

Both agents solve the same move-blocked finite-horizon optimal control
problem over the bicycle model; the automation additionally penalizes the
squared boundary potential over the corridor, while the driver penalizes the
squared corridor-violation distance of the predicted positions. The solver is
a projected spectral-gradient method with forward-difference gradients and a
monotone backtracking line search; it is deterministic and never raises on
non-convergence (it returns the best feasible point with a flag).

The driver's applied control follows a first-order neuromuscular lag on the
difference between the driver's desire and the automation's actual output.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .dynamics import ACCEL_MAX, DELTA_MAX, ControlVector, VehicleParams, VehicleState
from .risk import ApfParams
from .road import CURVE, RoadModel
from .safearea import SafeArea


@dataclass(frozen=True)
class MpcConfig:
    hp: int = 10               # prediction horizon (steps)
    hc: int = 3                # control horizon (steps)
    w_potential: float = 0.01  # boundary-potential weight (automation only)
    w_lateral: float = 0.6     # lateral tracking weight
    w_speed: float = 1.0       # speed tracking weight
    w_yaw_accel: float = 0.02  # yaw-acceleration weight
    q_accel: float = 0.1       # control effort, acceleration channel
    q_delta: float = 60.0      # control effort, steering channel
    rho_corridor: float = 1000.0  # corridor-violation weight (driver only)
    a_bound: float = ACCEL_MAX
    delta_bound: float = DELTA_MAX
    max_iterations: int = 40
    gradient_tol: float = 1e-6
    fd_step: float = 1e-6

    def __post_init__(self):
        if self.hp < self.hc:
            raise ValueError("prediction horizon must be >= control horizon")
        if self.hc < 1:
            raise ValueError("control horizon must be >= 1")


@dataclass(frozen=True)
class Reference:
    d_target: float   # desired lateral offset in the road frame (m)
    v_target: float   # desired speed (m/s)


@dataclass(frozen=True)
class DriverParams:
    k_h: float = 1.08  # proportional gain
    t_h: float = 0.17  # neuromuscular lag time constant (s)

    def __post_init__(self):
        if self.k_h <= 0.0 or self.t_h <= 0.0:
            raise ValueError("driver parameters must be positive")


@dataclass(frozen=True)
class MpcSolution:
    control: ControlVector
    cost: float
    converged: bool
    iterations: int


def minimize_box(f, x0, lower, upper, max_iterations=40, gradient_tol=1e-6, fd_step=1e-6):
    """Projected spectral-gradient descent with a monotone Armijo line search.

    Returns (x, fx, converged, cost_history); cost_history is non-increasing
    by construction of the line search.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    x = np.clip(np.asarray(x0, dtype=float), lower, upper)
    fx = f(x)
    g = _fd_gradient(f, x, fx, fd_step, lower, upper)
    alpha = 1.0 / max(1.0, float(np.max(np.abs(g))))
    history = [fx]
    converged = False
    iterations = 0
    for _ in range(max_iterations):
        iterations += 1
        if float(np.max(np.abs(x - np.clip(x - g, lower, upper)))) < gradient_tol:
            converged = True
            break
        step = alpha
        accepted = False
        x_new = x
        f_new = fx
        for _bt in range(30):
            cand = np.clip(x - step * g, lower, upper)
            direction = cand - x
            slope = float(np.dot(g, direction))
            f_cand = f(cand)
            if f_cand <= fx + 1e-4 * min(0.0, slope):
                x_new, f_new, accepted = cand, f_cand, True
                break
            step *= 0.5
        if not accepted:
            break
        g_new = _fd_gradient(f, x_new, f_new, fd_step, lower, upper)
        s_vec = x_new - x
        y_vec = g_new - g
        sy = float(np.dot(s_vec, y_vec))
        if sy > 1e-16:
            alpha = min(1e6, max(1e-6, float(np.dot(s_vec, s_vec)) / sy))
        x, fx, g = x_new, f_new, g_new
        history.append(fx)
    return x, fx, converged, history


def _fd_gradient(f, x, fx, h, lower, upper):
    g = np.zeros_like(x)
    for i in range(len(x)):
        xp = x.copy()
        if x[i] + h <= upper[i]:
            xp[i] = x[i] + h
            g[i] = (f(xp) - fx) / h
        else:
            xp[i] = x[i] - h
            g[i] = (fx - f(xp)) / h
    return g


class _MpcBase:
    """Shared machinery; subclasses pick the corridor cost term."""

    use_potential = False
    use_corridor_penalty = False

    def __init__(self, cfg: MpcConfig, params: VehicleParams, road: RoadModel,
                 apf: ApfParams | None = None, dt: float = 0.05):
        self.cfg = cfg
        self.params = params
        self.road = road
        self.apf = apf if apf is not None else ApfParams()
        self.dt = dt
        self._warm = np.zeros(2 * cfg.hc)
        self._bounds_lo = np.tile([-cfg.a_bound, -cfg.delta_bound], cfg.hc)
        self._bounds_hi = np.tile([cfg.a_bound, cfg.delta_bound], cfg.hc)

    def _context(self, state: VehicleState, ref: Reference, area: SafeArea | None,
                 s_hint: float):
        cfg = self.cfg
        road = self.road
        kind = _kernels.ROAD_CURVE if road.kind == CURVE else _kernels.ROAD_STRAIGHT
        weights = (
            cfg.w_potential if self.use_potential else 0.0,
            cfg.w_lateral,
            cfg.w_speed,
            cfg.w_yaw_accel,
            cfg.q_accel,
            cfg.q_delta,
            cfg.rho_corridor if self.use_corridor_penalty else 0.0,
        )
        upper = lower = None
        s_end = 0.0
        if area is not None:
            upper, lower, s_end = area.upper, area.lower, area.s_end
        return _kernels.make_cost_context(
            state.as_tuple(),
            self.dt,
            cfg.hp,
            cfg.hc,
            (self.params.lf, self.params.lr, self.params.m, self.params.iz,
             self.params.caf, self.params.car),
            (kind, road.edge_radius if road.kind == CURVE else 0.0,
             road.radius if road.kind == CURVE else 0.0, s_hint),
            (ref.d_target, ref.v_target),
            weights,
            (self.apf.alpha_f, self.apf.sigma_y, self.apf.cutoff),
            upper,
            lower,
            s_end,
        )

    def solve(self, state: VehicleState, ref: Reference, area: SafeArea | None,
              prev_u: ControlVector, s_hint: float = 0.0) -> MpcSolution:
        ctx = self._context(state, ref, area, s_hint)

        def objective(u):
            return _kernels.rollout_cost(ctx, u)

        x, fx, converged, history = minimize_box(
            objective,
            self._warm,
            self._bounds_lo,
            self._bounds_hi,
            max_iterations=self.cfg.max_iterations,
            gradient_tol=self.cfg.gradient_tol,
            fd_step=self.cfg.fd_step,
        )
        # shift-by-one warm start for the next step, holding the tail
        self._warm = np.concatenate([x[2:], x[-2:]])
        return MpcSolution(
            control=ControlVector(a=float(x[0]), delta=float(x[1])),
            cost=float(fx),
            converged=converged,
            iterations=len(history),
        )

    def reset(self, prev_u: ControlVector | None = None):
        self._warm = np.zeros(2 * self.cfg.hc)
        if prev_u is not None:
            self._warm = np.tile([prev_u.a, prev_u.delta], self.cfg.hc).astype(float)


class AutomationMpc(_MpcBase):
    """Desired-control generator of the automation (corridor-potential aware)."""
    use_potential = True
    use_corridor_penalty = False


class DriverMpc(_MpcBase):
    """Decision model of the driver (corridor membership as a soft constraint)."""
    use_potential = False
    use_corridor_penalty = True


def automation_mpc(state: VehicleState, ref: Reference, area: SafeArea | None,
                   prev_u: ControlVector, cfg: MpcConfig,
                   params: VehicleParams | None = None,
                   road: RoadModel | None = None,
                   dt: float = 0.05, s_hint: float = 0.0) -> MpcSolution:
    """One-shot automation solve, warm-started from the previous control."""
    ctl = AutomationMpc(cfg, params or VehicleParams(), road or RoadModel(kind="straight"), dt=dt)
    ctl.reset(prev_u)
    return ctl.solve(state, ref, area, prev_u, s_hint=s_hint)


def driver_mpc(state: VehicleState, ref: Reference, area: SafeArea | None,
               prev_u: ControlVector, cfg: MpcConfig,
               params: VehicleParams | None = None,
               road: RoadModel | None = None,
               dt: float = 0.05, s_hint: float = 0.0) -> MpcSolution:
    """One-shot driver solve, warm-started from the previous control."""
    ctl = DriverMpc(cfg, params or VehicleParams(), road or RoadModel(kind="straight"), dt=dt)
    ctl.reset(prev_u)
    return ctl.solve(state, ref, area, prev_u, s_hint=s_hint)


def driver_lag_step(prev_output: ControlVector, error: ControlVector,
                    p: DriverParams, dt: float) -> ControlVector:
    """Exact zero-order-hold step of the first-order lag K_h/(T_h s + 1).

    The error input is the driver's desire minus the automation's actual
    output; the discrete samples match the continuous step response exactly
    for piecewise-constant inputs.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    decay = math.exp(-dt / p.t_h)
    gain = (1.0 - decay) * p.k_h
    return ControlVector(
        a=decay * prev_output.a + gain * error.a,
        delta=decay * prev_output.delta + gain * error.delta,
    )
