# cython: boundscheck=False, wraparound=False, cdivision=False
"""Compiled MPC rollout kernel; semantics twin of codrive._kernels.pure.

Every arithmetic expression here mirrors the pure module operation for
operation so both backends return bit-identical costs.
"""
from libc.math cimport atan2, cos, exp, floor, sin, sqrt

import numpy as np

DEF M_PI = 3.141592653589793

ROAD_STRAIGHT = 0
ROAD_CURVE = 1

IMPL_NAME = "compiled"


cdef class CostContext:
    cdef double x0[6]
    cdef double dt
    cdef int hp, hc
    cdef double lf, lr, m, iz, caf, car
    cdef int road_kind
    cdef double edge_radius, station_radius, s_hint
    cdef double d_target, v_target
    cdef double w_pot, w_lat, w_spd, w_yaw, q_a, q_delta, rho
    cdef double apf_alpha, apf_sigma, apf_cutoff
    cdef double[::1] upper_s, upper_d, lower_s, lower_d
    cdef int n_upper, n_lower
    cdef double s_end

    def __init__(self, x0, dt, hp, hc, veh, road, ref, weights, apf, upper, lower, s_end):
        cdef int i
        for i in range(6):
            self.x0[i] = x0[i]
        self.dt = dt
        self.hp = hp
        self.hc = hc
        self.lf, self.lr, self.m, self.iz, self.caf, self.car = veh
        self.road_kind = int(road[0])
        self.edge_radius = road[1]
        self.station_radius = road[2]
        self.s_hint = road[3]
        self.d_target, self.v_target = ref
        (self.w_pot, self.w_lat, self.w_spd, self.w_yaw,
         self.q_a, self.q_delta, self.rho) = weights
        self.apf_alpha, self.apf_sigma, self.apf_cutoff = apf
        if upper is None or len(upper) == 0:
            arr = np.zeros(0, dtype=np.float64)
            self.upper_s = arr
            self.upper_d = arr
            self.lower_s = arr
            self.lower_d = arr
            self.n_upper = 0
            self.n_lower = 0
            self.s_end = 0.0
        else:
            up = np.ascontiguousarray(upper, dtype=np.float64)
            lo = np.ascontiguousarray(lower, dtype=np.float64)
            self.upper_s = np.ascontiguousarray(up[:, 0])
            self.upper_d = np.ascontiguousarray(up[:, 1])
            self.lower_s = np.ascontiguousarray(lo[:, 0])
            self.lower_d = np.ascontiguousarray(lo[:, 1])
            self.n_upper = up.shape[0]
            self.n_lower = lo.shape[0]
            self.s_end = s_end


def make_cost_context(x0, dt, hp, hc, veh, road, ref, weights, apf, upper, lower, s_end):
    return CostContext(x0, dt, hp, hc, veh, road, ref, weights, apf, upper, lower, s_end)


cdef double _interp_d(double[::1] ps, double[::1] pd, int n, double s) noexcept:
    cdef int i = 0
    if s <= ps[0] or n == 1:
        return pd[0]
    if s >= ps[n - 1]:
        return pd[n - 1]
    while i + 2 < n and ps[i + 1] <= s:
        i += 1
    cdef double s0 = ps[i]
    cdef double s1 = ps[i + 1]
    if s1 - s0 < 1e-12:
        return pd[i + 1]
    cdef double t = (s - s0) / (s1 - s0)
    return pd[i] + t * (pd[i + 1] - pd[i])


cdef double _polyline_dist(double[::1] ps, double[::1] pd, int n, double x, double y) noexcept:
    cdef double best, ax, ay, dx, dy, den, t, ex, ey, dist
    cdef int i
    if n == 1:
        return sqrt((x - ps[0]) * (x - ps[0]) + (y - pd[0]) * (y - pd[0]))
    best = 1e308
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
        dist = sqrt(ex * ex + ey * ey)
        if dist < best:
            best = dist
    return best


cdef double _corridor_rb(CostContext ctx, double s, double d) noexcept:
    cdef double lo, hi, du, dl
    if ctx.n_upper == 0 or s > ctx.s_end:
        return 0.0
    lo = _interp_d(ctx.lower_s, ctx.lower_d, ctx.n_lower, s)
    hi = _interp_d(ctx.upper_s, ctx.upper_d, ctx.n_upper, s)
    if d < lo or d > hi:
        return 0.0
    du = _polyline_dist(ctx.upper_s, ctx.upper_d, ctx.n_upper, s, d)
    dl = _polyline_dist(ctx.lower_s, ctx.lower_d, ctx.n_lower, s, d)
    return du if du < dl else dl


cdef double _corridor_violation(CostContext ctx, double s, double d) noexcept:
    cdef double lon, sc, lo, hi, lat
    if ctx.n_upper == 0:
        return 0.0
    lon = s - ctx.s_end if s > ctx.s_end else 0.0
    sc = s if s < ctx.s_end else ctx.s_end
    lo = _interp_d(ctx.lower_s, ctx.lower_d, ctx.n_lower, sc)
    hi = _interp_d(ctx.upper_s, ctx.upper_d, ctx.n_upper, sc)
    lat = 0.0
    if lo - d > lat:
        lat = lo - d
    if d - hi > lat:
        lat = d - hi
    return sqrt(lon * lon + lat * lat)


cdef void _deriv(double x, double y, double psi, double vx, double vy, double r,
                 double a, double delta,
                 double lf, double lr, double m, double iz, double caf, double car,
                 double* out) noexcept:
    cdef double vxd = vx if vx > 0.5 else 0.5
    cdef double alpha_f = (vy + lf * r) / vxd - delta
    cdef double alpha_r = (vy - lr * r) / vxd
    cdef double fcf = -caf * alpha_f
    cdef double fcr = -car * alpha_r
    cdef double cos_psi = cos(psi)
    cdef double sin_psi = sin(psi)
    out[0] = vx * cos_psi - vy * sin_psi
    out[1] = vx * sin_psi + vy * cos_psi
    out[2] = r
    out[3] = r * vy + a
    out[4] = -r * vx + (2.0 / m) * (fcf * cos(delta) + fcr)
    out[5] = (2.0 / iz) * (lf * fcf - lr * fcr)


def rollout_cost(CostContext ctx, u) -> float:
    """Objective of one MPC candidate: rollout + stage costs + control effort."""
    cdef double[::1] uv = np.ascontiguousarray(u, dtype=np.float64)
    cdef double x = ctx.x0[0]
    cdef double y = ctx.x0[1]
    cdef double psi = ctx.x0[2]
    cdef double vx = ctx.x0[3]
    cdef double vy = ctx.x0[4]
    cdef double r = ctx.x0[5]
    cdef double dt = ctx.dt
    cdef double lf = ctx.lf, lr = ctx.lr, m = ctx.m, iz = ctx.iz
    cdef double caf = ctx.caf, car = ctx.car
    cdef double prev_r = r
    cdef double cost = 0.0
    cdef double two_pi_rs = 2.0 * M_PI * ctx.station_radius
    cdef double k1[6]
    cdef double k2[6]
    cdef double k3[6]
    cdef double k4[6]
    cdef double h, w, a, delta, s, d, dx, dy, radial, lat, dv, dr, rb, pot, viol
    cdef int i, j
    for i in range(ctx.hp):
        j = i if i < ctx.hc else ctx.hc - 1
        a = uv[2 * j]
        delta = uv[2 * j + 1]

        _deriv(x, y, psi, vx, vy, r, a, delta, lf, lr, m, iz, caf, car, k1)
        h = 0.5 * dt
        _deriv(x + h * k1[0], y + h * k1[1], psi + h * k1[2],
               vx + h * k1[3], vy + h * k1[4], r + h * k1[5],
               a, delta, lf, lr, m, iz, caf, car, k2)
        _deriv(x + h * k2[0], y + h * k2[1], psi + h * k2[2],
               vx + h * k2[3], vy + h * k2[4], r + h * k2[5],
               a, delta, lf, lr, m, iz, caf, car, k3)
        _deriv(x + dt * k3[0], y + dt * k3[1], psi + dt * k3[2],
               vx + dt * k3[3], vy + dt * k3[4], r + dt * k3[5],
               a, delta, lf, lr, m, iz, caf, car, k4)
        w = dt / 6.0
        x = x + w * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
        y = y + w * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
        psi = psi + w * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
        vx = vx + w * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3])
        vy = vy + w * (k1[4] + 2.0 * k2[4] + 2.0 * k3[4] + k4[4])
        r = r + w * (k1[5] + 2.0 * k2[5] + 2.0 * k3[5] + k4[5])

        if ctx.road_kind == 0:
            s = x
            d = y
        else:
            dx = x
            dy = y - ctx.edge_radius
            radial = sqrt(dx * dx + dy * dy)
            d = ctx.edge_radius - radial
            s = atan2(dx, -dy) * ctx.station_radius
            s += floor((ctx.s_hint - s) / two_pi_rs + 0.5) * two_pi_rs

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
                pot = ctx.apf_alpha * exp(-(rb * rb) / (ctx.apf_sigma * ctx.apf_sigma))
                cost += ctx.w_pot * pot * pot
        if ctx.rho > 0.0:
            viol = _corridor_violation(ctx, s, d)
            cost += ctx.rho * viol * viol
    for j in range(ctx.hc):
        a = uv[2 * j]
        delta = uv[2 * j + 1]
        cost += ctx.q_a * a * a + ctx.q_delta * delta * delta
    return cost
