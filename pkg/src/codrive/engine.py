"""Closed-loop orchestration of one scenario.

Per control step: neighbors advance, the safe corridor is rebuilt from the
current positions, the automation MPC produces its desired control, the fault
layer degrades it, the degraded command is propagated by the CTRA predictor,
risks are assessed on the prediction, the fuzzy system allocates authority,
the allocation law caps the automation output, the driver model compensates
through its lag, and the plant integrates the summed control. Every step is
appended to the trace; a NaN anywhere aborts with the offending record.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import authority, faults, prediction, risk, road as road_mod, safearea
from .controllers import AutomationMpc, DriverMpc, driver_lag_step
from .dynamics import ControlVector, VehicleState, step as plant_step
from .scenario import (MODE_AUTOMATION_ONLY, MODE_SHARED, TASK_LANE_KEEP,
                       ScenarioConfig, ScenarioError)

TRACE_COLUMNS = (
    "k", "t",
    "x", "y", "psi", "vx", "vy", "r", "station", "lateral",
    "prec_s", "prec_d", "prec_v",
    "lead_s", "lead_d", "lead_v",
    "foll_s", "foll_d", "foll_v",
    "a_des", "delta_des", "a_f", "delta_f", "a_act", "delta_act",
    "a_h_des", "delta_h_des", "a_h_act", "delta_h_act",
    "a_total", "delta_total",
    "r_y", "r_x", "alpha_a",
    "branch_a", "branch_delta",
    "corridor_violation", "min_gap_preceding",
    "auto_converged", "driver_converged",
)


class NumericalAbort(RuntimeError):
    """A non-finite value appeared mid-run; carries the offending record."""

    def __init__(self, message: str, record: "TraceRecord"):
        super().__init__(message)
        self.record = record


@dataclass
class _Neighbor:
    role: str
    lane: int
    s: float
    d: float
    v: float


@dataclass(frozen=True)
class TraceRecord:
    k: int
    t: float
    x: float
    y: float
    psi: float
    vx: float
    vy: float
    r: float
    station: float
    lateral: float
    prec_s: float | None
    prec_d: float | None
    prec_v: float | None
    lead_s: float | None
    lead_d: float | None
    lead_v: float | None
    foll_s: float | None
    foll_d: float | None
    foll_v: float | None
    a_des: float
    delta_des: float
    a_f: float
    delta_f: float
    a_act: float
    delta_act: float
    a_h_des: float
    delta_h_des: float
    a_h_act: float
    delta_h_act: float
    a_total: float
    delta_total: float
    r_y: float
    r_x: float
    alpha_a: float
    branch_a: int
    branch_delta: int
    corridor_violation: float
    min_gap_preceding: float | None
    auto_converged: bool
    driver_converged: bool


@dataclass
class SimulationResult:
    config: ScenarioConfig
    trace: list[TraceRecord]
    summary: dict
    geometry: list[dict] = field(default_factory=list)

    def write(self, out_dir: str | Path, dump_geometry: bool = False):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_trace_csv(out / "trace.csv", self.trace)
        with open(out / "summary.json", "w", encoding="utf-8") as fh:
            json.dump(self.summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
        if dump_geometry:
            with open(out / "geometry.json", "w", encoding="utf-8") as fh:
                json.dump(self.geometry, fh)
                fh.write("\n")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    return format(value, ".12g")


def write_trace_csv(path: str | Path, trace: list[TraceRecord]):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(TRACE_COLUMNS) + "\n")
        for rec in trace:
            row = asdict(rec)
            fh.write(",".join(_fmt(row[c]) for c in TRACE_COLUMNS) + "\n")


class Simulation:
    """One scenario run; owns the controllers' warm-start state."""

    def __init__(self, cfg: ScenarioConfig, collect_geometry: bool = False):
        self.cfg = cfg
        self.road = cfg.road
        self.state = cfg.initial_ego_state()
        self.neighbors = [
            _Neighbor(
                role=spec.role,
                lane=spec.lane,
                s=cfg.ego_station + spec.gap,
                d=road_mod.lane_center_offset(cfg.road, spec.lane),
                v=spec.speed,
            )
            for spec in cfg.neighbors
        ]
        self.auto_mpc = AutomationMpc(cfg.mpc, cfg.vehicle, cfg.road, apf=cfg.apf, dt=cfg.dt)
        self.driver_mpc = DriverMpc(cfg.mpc, cfg.vehicle, cfg.road, apf=cfg.apf, dt=cfg.dt)
        self.prev_u_auto = ControlVector(0.0, 0.0)
        self.u_h_act = ControlVector(0.0, 0.0)
        self.s_hint = cfg.ego_station
        self.area: safearea.SafeArea | None = None
        self.collect_geometry = collect_geometry

    # -- corridor -----------------------------------------------------------

    def _obstacles(self, window: tuple[float, float]) -> list[safearea.Obstacle]:
        out = []
        for nbr in self.neighbors:
            half = 0.5 * self.cfg.vehicle_length
            if nbr.s + half < window[0] or nbr.s - half > window[1]:
                continue
            out.append(safearea.Obstacle(
                center_s=nbr.s, center_d=nbr.d,
                length=self.cfg.vehicle_length, width=self.cfg.vehicle_width,
                speed=nbr.v,
            ))
        return out

    def _lateral_clip(self) -> tuple[float, float] | None:
        if not (self.cfg.corridor.clip_to_task_lane and self.cfg.task == TASK_LANE_KEEP):
            return None
        w = self.road.lane_width
        target = self.cfg.reference.d_target
        return (target - 0.5 * w - 0.5 * w, target + 0.5 * w + 0.5 * w)

    def _project_start(self, s: float, d: float,
                       window: tuple[float, float], lat: tuple[float, float],
                       obstacles: list[safearea.Obstacle]) -> tuple[float, float]:
        eps = 1e-3
        s = min(max(s, window[0] + eps), window[1] - eps)
        d = min(max(d, lat[0] + eps), lat[1] - eps)
        for obs in obstacles:
            if obs.contains(s, d):
                r = obs.rect()
                # push to the laterally nearest face, staying inside the window
                down = d - r[2]
                up = r[3] - d
                d = r[2] - eps if down <= up else r[3] + eps
                d = min(max(d, lat[0] + eps), lat[1] - eps)
        return s, d

    def _final_region(self, ego_s: float, window: tuple[float, float]) -> tuple[float, float]:
        target_d = self.cfg.reference.d_target
        prec = next((n for n in self.neighbors if n.role == risk.PRECEDING), None)
        margin = 2.0
        if prec is not None:
            f_s = prec.s - 0.5 * self.cfg.vehicle_length - self.cfg.dpf.d_o
            f_s = min(f_s, window[1] - margin)
        else:
            f_s = window[1] - margin
        f_s = max(f_s, ego_s + 1.0)
        return (f_s, target_d)

    def _build_corridor(self, ego_s: float, ego_d: float):
        cfg = self.cfg
        window = (max(0.0, ego_s - cfg.corridor.window_back),
                  min(self.road.length, ego_s + cfg.corridor.window_ahead))
        obstacles = self._obstacles(window)
        clip = self._lateral_clip()
        attempts = [clip, None] if clip is not None else [None]
        last_error: Exception | None = None
        for lateral in attempts:
            lat = lateral if lateral is not None else (0.0, self.road.width)
            lat = (max(0.0, lat[0]), min(self.road.width, lat[1]))
            try:
                tri = safearea.triangulate(self.road, obstacles, window, lateral_window=lat,
                                           boundary_spacing=cfg.corridor.boundary_spacing)
                s_p = self._project_start(ego_s, ego_d, window, lat, obstacles)
                f_p = self._final_region(ego_s, window)
                f_p = (f_p[0], min(max(f_p[1], lat[0] + 1e-3), lat[1] - 1e-3))
                area = safearea.find_corridor(tri, s_p, f_p)
                return area, tri
            except (safearea.ContainmentError, safearea.DisconnectedError,
                    safearea.cdt.GeometryError) as exc:
                last_error = exc
        if self.area is not None:
            return self.area, None
        raise ScenarioError(f"cannot build the initial safe corridor: {last_error}")

    # -- main loop ----------------------------------------------------------

    def run(self) -> SimulationResult:
        cfg = self.cfg
        trace: list[TraceRecord] = []
        geometry: list[dict] = []
        for k in range(cfg.n_steps):
            rec, geo = self._step(k)
            trace.append(rec)
            if self.collect_geometry and geo is not None:
                geometry.append(geo)
            _check_finite(rec)
        summary = summarize(cfg, trace)
        return SimulationResult(config=cfg, trace=trace, summary=summary, geometry=geometry)

    def _step(self, k: int):
        cfg = self.cfg
        dt = cfg.dt

        # 1. neighbors move first so every consumer sees one consistent snapshot
        for nbr in self.neighbors:
            nbr.s += nbr.v * dt

        ego_s, ego_d = road_mod.to_road_frame(self.road, self.state.x, self.state.y,
                                              s_hint=self.s_hint)
        self.s_hint = ego_s

        # 2. safe corridor from the current positions
        area, tri = self._build_corridor(ego_s, ego_d)
        self.area = area

        # 3. automation desired control
        auto = self.auto_mpc.solve(self.state, cfg.reference, area,
                                   self.prev_u_auto, s_hint=ego_s)
        u_des = auto.control

        # 4. degradation
        u_f = faults.inject(u_des, k, cfg.fault)

        # 5. prediction under the degraded control
        seed = prediction.seed_from_degraded_control(self.state, u_f, cfg.vehicle, dt)
        seed_s, seed_d = road_mod.to_road_frame(self.road, seed.x, seed.y, s_hint=ego_s)
        if self.road.kind == road_mod.STRAIGHT:
            psi_road = 0.0
        else:
            psi_road = seed_s / self.road.radius
        road_seed = prediction.CtraState(x=seed_s, y=seed_d, psi=seed.psi - psi_road,
                                         v=seed.v, a=seed.a, r=seed.r)
        pred = prediction.ctra_predict(road_seed, 0.0, cfg.prediction)
        nbr_pred: dict[str, tuple[float, float]] = {}
        for nbr in self.neighbors:
            (ps, _pd), pv = prediction.predict_neighbor((nbr.s, nbr.d), nbr.v, cfg.prediction)
            nbr_pred[nbr.role] = (ps, pv)

        # 6. risk assessment on the predicted situation
        r_b = area.distance_to_boundaries((pred.x, pred.y))
        report = risk.assess(r_b, (pred.x, pred.v), nbr_pred,
                             cfg.apf, cfg.dpf, cfg.task_weights)

        # 7. authority from the fuzzy system
        alpha_a = authority.fis_alpha(report.r_y, report.r_x)

        # 8. allocation
        if cfg.mode == MODE_SHARED:
            a_act, branch_a = authority.allocate_component(
                u_des.a, u_f.a, alpha_a, cfg.allocation)
            d_act, branch_d = authority.allocate_component(
                u_des.delta, u_f.delta, alpha_a, cfg.allocation)
            u_act = ControlVector(a=a_act, delta=d_act)
        else:
            u_act = u_f
            branch_a = branch_d = 0

        # 9. driver compensation through the neuromuscular lag
        if cfg.mode == MODE_SHARED:
            drv = self.driver_mpc.solve(self.state, cfg.reference, area,
                                        self.prev_u_auto, s_hint=ego_s)
            u_h_des = drv.control
            err = ControlVector(a=u_h_des.a - u_act.a, delta=u_h_des.delta - u_act.delta)
            self.u_h_act = driver_lag_step(self.u_h_act, err, cfg.driver, dt)
            driver_converged = drv.converged
        else:
            u_h_des = ControlVector(0.0, 0.0)
            self.u_h_act = ControlVector(0.0, 0.0)
            driver_converged = True

        total = ControlVector(a=u_act.a + self.u_h_act.a,
                              delta=u_act.delta + self.u_h_act.delta)

        # 10. plant (the record snapshots the situation at t = k*dt)
        violation = area.violation_distance((ego_s, ego_d))
        prec = next((n for n in self.neighbors if n.role == risk.PRECEDING), None)
        min_gap = (prec.s - ego_s - cfg.vehicle_length) if prec is not None else None
        state_before = self.state
        self.prev_u_auto = u_des

        def _nbr(role):
            n = next((n for n in self.neighbors if n.role == role), None)
            return (n.s, n.d, n.v) if n is not None else (None, None, None)

        prec_t, lead_t, foll_t = _nbr(risk.PRECEDING), _nbr(risk.LEADER), _nbr(risk.FOLLOWER)
        rec = TraceRecord(
            k=k, t=k * dt,
            x=state_before.x, y=state_before.y, psi=state_before.psi,
            vx=state_before.vx, vy=state_before.vy, r=state_before.r,
            station=ego_s, lateral=ego_d,
            prec_s=prec_t[0], prec_d=prec_t[1], prec_v=prec_t[2],
            lead_s=lead_t[0], lead_d=lead_t[1], lead_v=lead_t[2],
            foll_s=foll_t[0], foll_d=foll_t[1], foll_v=foll_t[2],
            a_des=u_des.a, delta_des=u_des.delta,
            a_f=u_f.a, delta_f=u_f.delta,
            a_act=u_act.a, delta_act=u_act.delta,
            a_h_des=u_h_des.a, delta_h_des=u_h_des.delta,
            a_h_act=self.u_h_act.a, delta_h_act=self.u_h_act.delta,
            a_total=total.a, delta_total=total.delta,
            r_y=report.r_y, r_x=report.r_x, alpha_a=alpha_a,
            branch_a=branch_a, branch_delta=branch_d,
            corridor_violation=violation,
            min_gap_preceding=min_gap,
            auto_converged=auto.converged, driver_converged=driver_converged,
        )
        try:
            new_state = plant_step(self.state, total, cfg.vehicle, dt)
        except ValueError as exc:
            raise NumericalAbort(f"plant step failed at step {k}: {exc}", rec) from exc
        if not all(math.isfinite(v) for v in new_state.as_tuple()):
            raise NumericalAbort(f"non-finite plant state after step {k}", rec)
        self.state = new_state
        geo = None
        if self.collect_geometry and tri is not None:
            geo = {
                "k": k,
                "points": tri.points.tolist(),
                "triangles": tri.triangles.tolist(),
                "channel": list(area.channel),
                "upper": area.upper.tolist(),
                "lower": area.lower.tolist(),
            }
        return rec, geo


def _check_finite(rec: TraceRecord):
    for key, value in asdict(rec).items():
        if isinstance(value, float) and not math.isfinite(value):
            raise NumericalAbort(f"non-finite value in column {key!r} at step {rec.k}", rec)


def _ego_overlaps(rec: TraceRecord, length: float, width: float) -> bool:
    for prefix in ("prec", "lead", "foll"):
        s = getattr(rec, f"{prefix}_s")
        d = getattr(rec, f"{prefix}_d")
        if s is None:
            continue
        if abs(s - rec.station) < length and abs(d - rec.lateral) < width:
            return True
    return False


def summarize(cfg: ScenarioConfig, trace: list[TraceRecord]) -> dict:
    if not trace:
        state = cfg.initial_ego_state()
        return {
            "scenario": cfg.name,
            "mode": cfg.mode,
            "steps": 0,
            "duration": 0.0,
            "initial_state": {
                "x": state.x, "y": state.y, "psi": state.psi,
                "vx": state.vx, "vy": state.vy, "r": state.r,
            },
            "min_gap_preceding": None,
            "max_abs_lateral_deviation": 0.0,
            "max_corridor_violation": 0.0,
            "collision": False,
            "max_r_y": 0.0,
            "max_r_x": 0.0,
            "min_alpha_a": None,
        }
    gaps = [r.min_gap_preceding for r in trace if r.min_gap_preceding is not None]
    target = cfg.reference.d_target
    collision = any(
        (r.min_gap_preceding is not None and r.min_gap_preceding < 0.0)
        or _ego_overlaps(r, cfg.vehicle_length, cfg.vehicle_width)
        for r in trace
    )
    return {
        "scenario": cfg.name,
        "mode": cfg.mode,
        "steps": len(trace),
        "duration": len(trace) * cfg.dt,
        "min_gap_preceding": min(gaps) if gaps else None,
        "max_abs_lateral_deviation": max(abs(r.lateral - target) for r in trace),
        "max_corridor_violation": max(r.corridor_violation for r in trace),
        "collision": collision,
        "max_r_y": max(r.r_y for r in trace),
        "max_r_x": max(r.r_x for r in trace),
        "min_alpha_a": min(r.alpha_a for r in trace),
        "final_vx": trace[-1].vx,
        "final_station": trace[-1].station,
        "final_lateral": trace[-1].lateral,
    }


def run(cfg: ScenarioConfig, collect_geometry: bool = False) -> SimulationResult:
    """Run one scenario to completion (or raise NumericalAbort)."""
    return Simulation(cfg, collect_geometry=collect_geometry).run()
