"""Pure-Python MPC rollout kernel; semantics twin of the compiled extension.

The hot path of the whole simulator is the MPC objective: an RK4 rollout of
the bicycle model over the prediction horizon plus stage costs, evaluated a
few hundred times per control step by the finite-difference solver. The
compiled extension (codrive._speedups) implements exactly this module's
arithmetic, operation for operation, so either backend produces identical
costs; this file is the fallback and the readable specification.
"""
from __future__ import annotations

import math

IMPL_NAME = "pure"

ROAD_STRAIGHT = 0
ROAD_CURVE = 1


class CostContext:
    """Frozen per-solve data for rollout_cost."""

    __slots__ = (
        "x0", "dt", "hp", "hc",
        "lf", "lr", "m", "iz", "caf", "car",
        "road_kind", "edge_radius", "station_radius", "s_hint",
        "d_target", "v_target",
        "w_pot", "w_lat", "w_spd", "w_yaw", "q_a", "q_delta", "rho",
        "apf_alpha", "apf_sigma", "apf_cutoff",
        "upper_s", "upper_d", "lower_s", "lower_d", "s_end",
    )

    def __init__(self, x0, dt, hp, hc, veh, road, ref, weights, apf, upper, lower, s_end):
        self.x0 = tuple(float(v) for v in x0)
        self.dt = float(dt)
        self.hp = int(hp)
        self.hc = int(hc)
        self.lf, self.lr, self.m, self.iz, self.caf, self.car = (float(v) for v in veh)
        self.road_kind = int(road[0])
        self.edge_radius = float(road[1])
        self.station_radius = float(road[2])
        self.s_hint = float(road[3])
        self.d_target, self.v_target = (float(v) for v in ref)
        (self.w_pot, self.w_lat, self.w_spd, self.w_yaw,
         self.q_a, self.q_delta, self.rho) = (float(v) for v in weights)
        self.apf_alpha, self.apf_sigma, self.apf_cutoff = (float(v) for v in apf)
        if upper is None or len(upper) == 0:
            self.upper_s = self.upper_d = self.lower_s = self.lower_d = ()
            self.s_end = 0.0
        else:
            self.upper_s = tuple(float(p[0]) for p in upper)
            self.upper_d = tuple(float(p[1]) for p in upper)
            self.lower_s = tuple(float(p[0]) for p in lower)
            self.lower_d = tuple(float(p[1]) for p in lower)
            self.s_end = float(s_end)


def make_cost_context(x0, dt, hp, hc, veh, road, ref, weights, apf, upper, lower, s_end):
    return CostContext(x0, dt, hp, hc, veh, road, ref, weights, apf, upper, lower, s_end)


def _interp_d(ps, pd, s):
    n = len(ps)
    if s <= ps[0] or n == 1:
        return pd[0]
    if s >= ps[n - 1]:
        return pd[n - 1]
    i = 0
    while i + 2 < n and ps[i + 1] <= s:
        i += 1
    s0 = ps[i]
    s1 = ps[i + 1]
    if s1 - s0 < 1e-12:
        return pd[i + 1]
    t = (s - s0) / (s1 - s0)
    return pd[i] + t * (pd[i + 1] - pd[i])


def _polyline_dist(ps, pd, x, y):
    n = len(ps)
    if n == 1:
        return math.sqrt((x - ps[0]) * (x - ps[0]) + (y - pd[0]) * (y - pd[0]))
    best = math.inf
    for i in range(n - 1):
        ax = ps[i]
        ay = pd[i]
        dx = ps[i + 1] - ax
        dy = pd[i + 1] - ay
        den = dx * dx + dy * dy
        if den < 1e-24:
            t = 0.0
        else:
            t = ((x - ax) * dx + (y - ay) * dy) / den
            if t < 0.0:
                t = 0.0
            elif t > 1.0:
                t = 1.0
        ex = x - (ax + t * dx)
        ey = y - (ay + t * dy)
        dist = math.sqrt(ex * ex + ey * ey)
        if dist < best:
            best = dist
    return best


def _corridor_rb(ctx: CostContext, s, d):
    if not ctx.upper_s or s > ctx.s_end:
        return 0.0
    lo = _interp_d(ctx.lower_s, ctx.lower_d, s)
    hi = _interp_d(ctx.upper_s, ctx.upper_d, s)
    if d < lo or d > hi:
        return 0.0
    du = _polyline_dist(ctx.upper_s, ctx.upper_d, s, d)
    dl = _polyline_dist(ctx.lower_s, ctx.lower_d, s, d)
    return du if du < dl else dl


def _corridor_violation(ctx: CostContext, s, d):
    if not ctx.upper_s:
        return 0.0
    lon = s - ctx.s_end if s > ctx.s_end else 0.0
    sc = s if s < ctx.s_end else ctx.s_end
    lo = _interp_d(ctx.lower_s, ctx.lower_d, sc)
    hi = _interp_d(ctx.upper_s, ctx.upper_d, sc)
    lat = 0.0
    if lo - d > lat:
        lat = lo - d
    if d - hi > lat:
        lat = d - hi
    return math.sqrt(lon * lon + lat * lat)


def rollout_cost(ctx: CostContext, u) -> float:
    """Objective of one MPC candidate: rollout + stage costs + control effort."""
    x, y, psi, vx, vy, r = ctx.x0
    dt = ctx.dt
    lf, lr, m, iz, caf, car = ctx.lf, ctx.lr, ctx.m, ctx.iz, ctx.caf, ctx.car
    prev_r = r
    cost = 0.0
    two_pi_rs = 2.0 * math.pi * ctx.station_radius
    for i in range(ctx.hp):
        j = i if i < ctx.hc else ctx.hc - 1
        a = u[2 * j]
        delta = u[2 * j + 1]

        # RK4 over the bicycle model (divisor floored at 0.5 m/s)
        k1 = _deriv(x, y, psi, vx, vy, r, a, delta, lf, lr, m, iz, caf, car)
        h = 0.5 * dt
        k2 = _deriv(x + h * k1[0], y + h * k1[1], psi + h * k1[2],
                    vx + h * k1[3], vy + h * k1[4], r + h * k1[5],
                    a, delta, lf, lr, m, iz, caf, car)
        k3 = _deriv(x + h * k2[0], y + h * k2[1], psi + h * k2[2],
                    vx + h * k2[3], vy + h * k2[4], r + h * k2[5],
                    a, delta, lf, lr, m, iz, caf, car)
        k4 = _deriv(x + dt * k3[0], y + dt * k3[1], psi + dt * k3[2],
                    vx + dt * k3[3], vy + dt * k3[4], r + dt * k3[5],
                    a, delta, lf, lr, m, iz, caf, car)
        w = dt / 6.0
        x = x + w * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
        y = y + w * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
        psi = psi + w * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
        vx = vx + w * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3])
        vy = vy + w * (k1[4] + 2.0 * k2[4] + 2.0 * k3[4] + k4[4])
        r = r + w * (k1[5] + 2.0 * k2[5] + 2.0 * k3[5] + k4[5])

        if ctx.road_kind == ROAD_STRAIGHT:
            s = x
            d = y
        else:
            dx = x
            dy = y - ctx.edge_radius
            radial = math.sqrt(dx * dx + dy * dy)
            d = ctx.edge_radius - radial
            s = math.atan2(dx, -dy) * ctx.station_radius
            s += math.floor((ctx.s_hint - s) / two_pi_rs + 0.5) * two_pi_rs

        lat = d - ctx.d_target
        cost += ctx.w_lat * lat * lat
        dv = vx - ctx.v_target
        cost += ctx.w_spd * dv * dv
        dr = (r - prev_r) / dt
        cost += ctx.w_yaw * dr * dr
        prev_r = r
        if ctx.w_pot > 0.0:
            rb = _corridor_rb(ctx, s, d)
            if rb <= ctx.apf_cutoff:
                pot = ctx.apf_alpha * math.exp(-(rb * rb) / (ctx.apf_sigma * ctx.apf_sigma))
                cost += ctx.w_pot * pot * pot
        if ctx.rho > 0.0:
            viol = _corridor_violation(ctx, s, d)
            cost += ctx.rho * viol * viol
    for j in range(ctx.hc):
        a = u[2 * j]
        delta = u[2 * j + 1]
        cost += ctx.q_a * a * a + ctx.q_delta * delta * delta
    return cost


def _deriv(x, y, psi, vx, vy, r, a, delta, lf, lr, m, iz, caf, car):
    vxd = vx if vx > 0.5 else 0.5
    alpha_f = (vy + lf * r) / vxd - delta
    alpha_r = (vy - lr * r) / vxd
    fcf = -caf * alpha_f
    fcr = -car * alpha_r
    cos_psi = math.cos(psi)
    sin_psi = math.sin(psi)
    return (
        vx * cos_psi - vy * sin_psi,
        vx * sin_psi + vy * cos_psi,
        r,
        r * vy + a,
        -r * vx + (2.0 / m) * (fcf * math.cos(delta) + fcr),
        (2.0 / iz) * (lf * fcf - lr * fcr),
    )
