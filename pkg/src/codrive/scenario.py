"""Scenario configuration: YAML schema, validation, bundled scenarios.

A scenario file is a YAML document with one section per parameter block
(road, ego, reference, neighbors, fault, vehicle, prediction, apf, dpf, mpc,
driver, allocation, corridor) plus top-level run settings. Unknown keys are
rejected. See docs/scenario_format.md for the field-by-field reference.
"""
from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .authority import AllocationParams
from .controllers import DriverParams, MpcConfig, Reference
from .dynamics import VehicleParams, VehicleState
from .faults import FaultProfile
from .prediction import PredictionConfig
from .risk import (LANE_CHANGE_WEIGHTS, LANE_KEEP_WEIGHTS, ApfParams, DpfParams,
                   TaskWeights)
from .road import RoadModel, from_road_frame, lane_center_offset, road_heading

MODE_SHARED = "shared"
MODE_AUTOMATION_ONLY = "automation-only"

TASK_LANE_KEEP = "lane_keep"
TASK_LANE_CHANGE = "lane_change"


class ScenarioError(ValueError):
    """Invalid scenario configuration."""


@dataclass(frozen=True)
class NeighborSpec:
    role: str
    gap: float    # initial station relative to the ego (+ ahead, - behind) (m)
    speed: float  # constant speed (m/s)
    lane: int


@dataclass(frozen=True)
class CorridorConfig:
    window_back: float = 20.0
    window_ahead: float = 80.0
    clip_to_task_lane: bool = True
    boundary_spacing: float = 10.0  # window-border subdivision interval (m); 0 disables


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    mode: str
    task: str
    duration: float
    dt: float
    road: RoadModel
    ego_lane: int
    ego_station: float
    ego_speed: float
    reference: Reference
    neighbors: tuple[NeighborSpec, ...]
    fault: FaultProfile | None
    vehicle: VehicleParams
    vehicle_length: float
    vehicle_width: float
    prediction: PredictionConfig
    apf: ApfParams
    dpf: DpfParams
    mpc: MpcConfig
    driver: DriverParams
    allocation: AllocationParams
    corridor: CorridorConfig = field(default_factory=CorridorConfig)

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))

    @property
    def task_weights(self) -> TaskWeights:
        return LANE_KEEP_WEIGHTS if self.task == TASK_LANE_KEEP else LANE_CHANGE_WEIGHTS

    def initial_ego_state(self) -> VehicleState:
        d = lane_center_offset(self.road, self.ego_lane)
        x, y = from_road_frame(self.road, self.ego_station, d)
        psi = road_heading(self.road, self.ego_station)
        return VehicleState(x=x, y=y, psi=psi, vx=self.ego_speed, vy=0.0, r=0.0)


_SCHEMA: dict[str, set[str]] = {
    "": {"name", "description", "mode", "task", "duration", "dt", "road", "ego",
         "reference", "neighbors", "fault", "vehicle", "prediction", "apf", "dpf",
         "mpc", "driver", "allocation", "corridor"},
    "road": {"kind", "lane_width", "lane_count", "length", "radius"},
    "ego": {"lane", "station", "speed"},
    "reference": {"lane", "v_target"},
    "neighbors": {"preceding", "leader", "follower"},
    "neighbors.entry": {"gap", "speed", "lane"},
    "fault": {"channel", "onset_step", "ramp_steps", "plateau", "scale"},
    "vehicle": {"lf", "lr", "m", "iz", "caf", "car", "length", "width"},
    "prediction": {"horizon", "r_eps"},
    "apf": {"alpha_f", "sigma_y", "d_c"},
    "dpf": {"alpha", "a_f", "sigma_x", "b", "a_max", "t_r", "t_i", "d_o"},
    "mpc": {"hp", "hc", "w_potential", "w_lateral", "w_speed", "w_yaw_accel",
            "q_accel", "q_delta", "rho_corridor", "max_iterations",
            "gradient_tol", "fd_step"},
    "driver": {"k_h", "t_h"},
    "allocation": {"epsilon", "ratio_tol"},
    "corridor": {"window_back", "window_ahead", "clip_to_task_lane", "boundary_spacing"},
}


def _check_keys(section: str, data: dict):
    allowed = _SCHEMA[section]
    unknown = set(data) - allowed
    if unknown:
        where = section or "top level"
        raise ScenarioError(f"unknown keys in {where}: {sorted(unknown)}")


def _section(raw: dict, name: str) -> dict:
    data = raw.get(name, {})
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ScenarioError(f"section {name!r} must be a mapping")
    _check_keys(name, data)
    return data


def scenario_from_dict(raw: dict) -> ScenarioConfig:
    if not isinstance(raw, dict):
        raise ScenarioError("scenario document must be a mapping")
    _check_keys("", raw)

    mode = raw.get("mode", MODE_SHARED)
    if mode not in (MODE_SHARED, MODE_AUTOMATION_ONLY):
        raise ScenarioError(f"mode must be {MODE_SHARED!r} or {MODE_AUTOMATION_ONLY!r}")
    task = raw.get("task", TASK_LANE_KEEP)
    if task not in (TASK_LANE_KEEP, TASK_LANE_CHANGE):
        raise ScenarioError(f"task must be {TASK_LANE_KEEP!r} or {TASK_LANE_CHANGE!r}")

    duration = float(raw.get("duration", 20.0))
    dt = float(raw.get("dt", 0.05))
    if duration < 0.0 or dt <= 0.0:
        raise ScenarioError("duration must be >= 0 and dt > 0")
    steps = duration / dt
    if abs(steps - round(steps)) > 1e-9:
        raise ScenarioError("duration must be an integral number of steps")

    road_data = _section(raw, "road")
    try:
        road = RoadModel(
            kind=road_data.get("kind", "straight"),
            lane_width=float(road_data.get("lane_width", 3.5)),
            lane_count=int(road_data.get("lane_count", 2)),
            length=float(road_data.get("length", 500.0)),
            radius=float(road_data.get("radius", 0.0)),
        )
    except ValueError as exc:
        raise ScenarioError(f"invalid road: {exc}") from exc

    ego = _section(raw, "ego")
    ego_lane = int(ego.get("lane", 0))
    ego_station = float(ego.get("station", 0.0))
    ego_speed = float(ego.get("speed", 15.0))
    if not (0 <= ego_lane < road.lane_count):
        raise ScenarioError("ego lane out of range")

    ref_data = _section(raw, "reference")
    ref_lane = int(ref_data.get("lane", ego_lane))
    if not (0 <= ref_lane < road.lane_count):
        raise ScenarioError("reference lane out of range")
    reference = Reference(
        d_target=lane_center_offset(road, ref_lane),
        v_target=float(ref_data.get("v_target", ego_speed)),
    )

    nbr_data = _section(raw, "neighbors")
    neighbors: list[NeighborSpec] = []
    adjacent = ego_lane + 1 if ego_lane + 1 < road.lane_count else max(0, ego_lane - 1)
    defaults = {"preceding": ego_lane, "leader": adjacent, "follower": adjacent}
    for role in ("preceding", "leader", "follower"):
        if role not in nbr_data:
            continue
        entry = nbr_data[role] or {}
        _check_keys("neighbors.entry", entry)
        if "gap" not in entry or "speed" not in entry:
            raise ScenarioError(f"neighbor {role!r} requires gap and speed")
        lane = int(entry.get("lane", defaults[role]))
        if not (0 <= lane < road.lane_count):
            raise ScenarioError(f"neighbor {role!r} lane out of range")
        neighbors.append(NeighborSpec(role=role, gap=float(entry["gap"]),
                                      speed=float(entry["speed"]), lane=lane))

    fault_data = _section(raw, "fault")
    fault: FaultProfile | None = None
    channel = fault_data.get("channel", "none")
    if channel != "none" and fault_data:
        try:
            fault = FaultProfile(
                channel=channel,
                onset_step=int(fault_data.get("onset_step", 0)),
                ramp_steps=int(fault_data.get("ramp_steps", 0)),
                plateau=float(fault_data.get("plateau", 0.0)),
                scale=float(fault_data.get("scale", 1.0)),
            )
        except ValueError as exc:
            raise ScenarioError(f"invalid fault: {exc}") from exc

    veh_data = _section(raw, "vehicle")
    try:
        vehicle = VehicleParams(
            lf=float(veh_data.get("lf", 1.21)),
            lr=float(veh_data.get("lr", 1.05)),
            m=float(veh_data.get("m", 2000.0)),
            iz=float(veh_data.get("iz", 1300.0)),
            caf=float(veh_data.get("caf", 80000.0)),
            car=float(veh_data.get("car", 80000.0)),
        )
    except ValueError as exc:
        raise ScenarioError(f"invalid vehicle: {exc}") from exc
    vehicle_length = float(veh_data.get("length", 4.5))
    vehicle_width = float(veh_data.get("width", 2.0))
    if vehicle_width >= road.lane_width:
        raise ScenarioError("vehicle width must be below the lane width")

    pred_data = _section(raw, "prediction")
    try:
        pred = PredictionConfig(
            horizon=float(pred_data.get("horizon", 0.5)),
            r_eps=float(pred_data.get("r_eps", 1e-4)),
        )
        apf_data = _section(raw, "apf")
        apf = ApfParams(
            alpha_f=float(apf_data.get("alpha_f", 30.0)),
            sigma_y=float(apf_data.get("sigma_y", 1.0)),
            d_c=float(apf_data.get("d_c", 0.8)),
            v_w=vehicle_width,
        )
        dpf_data = _section(raw, "dpf")
        dpf = DpfParams(
            alpha=float(dpf_data.get("alpha", 10.0)),
            a_f=float(dpf_data.get("a_f", 2.0)),
            sigma_x=float(dpf_data.get("sigma_x", 4.0)),
            b=float(dpf_data.get("b", 2.0)),
            a_max=float(dpf_data.get("a_max", 7.0)),
            t_r=float(dpf_data.get("t_r", 0.1)),
            t_i=float(dpf_data.get("t_i", 0.1)),
            d_o=float(dpf_data.get("d_o", 2.0)),
        )
        mpc_data = _section(raw, "mpc")
        mpc = MpcConfig(
            hp=int(mpc_data.get("hp", 10)),
            hc=int(mpc_data.get("hc", 3)),
            w_potential=float(mpc_data.get("w_potential", MpcConfig.w_potential)),
            w_lateral=float(mpc_data.get("w_lateral", MpcConfig.w_lateral)),
            w_speed=float(mpc_data.get("w_speed", MpcConfig.w_speed)),
            w_yaw_accel=float(mpc_data.get("w_yaw_accel", MpcConfig.w_yaw_accel)),
            q_accel=float(mpc_data.get("q_accel", MpcConfig.q_accel)),
            q_delta=float(mpc_data.get("q_delta", MpcConfig.q_delta)),
            rho_corridor=float(mpc_data.get("rho_corridor", MpcConfig.rho_corridor)),
            max_iterations=int(mpc_data.get("max_iterations", 40)),
            gradient_tol=float(mpc_data.get("gradient_tol", 1e-6)),
            fd_step=float(mpc_data.get("fd_step", 1e-6)),
        )
        driver_data = _section(raw, "driver")
        driver = DriverParams(
            k_h=float(driver_data.get("k_h", 1.08)),
            t_h=float(driver_data.get("t_h", 0.17)),
        )
        alloc_data = _section(raw, "allocation")
        allocation = AllocationParams(
            epsilon=float(alloc_data.get("epsilon", 1e-6)),
            ratio_tol=float(alloc_data.get("ratio_tol", 0.02)),
        )
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc

    cor_data = _section(raw, "corridor")
    corridor = CorridorConfig(
        window_back=float(cor_data.get("window_back", 20.0)),
        window_ahead=float(cor_data.get("window_ahead", 80.0)),
        clip_to_task_lane=bool(cor_data.get("clip_to_task_lane", True)),
        boundary_spacing=float(cor_data.get("boundary_spacing", 10.0)),
    )

    return ScenarioConfig(
        name=str(raw.get("name", "scenario")),
        mode=mode,
        task=task,
        duration=duration,
        dt=dt,
        road=road,
        ego_lane=ego_lane,
        ego_station=ego_station,
        ego_speed=ego_speed,
        reference=reference,
        neighbors=tuple(neighbors),
        fault=fault,
        vehicle=vehicle,
        vehicle_length=vehicle_length,
        vehicle_width=vehicle_width,
        prediction=pred,
        apf=apf,
        dpf=dpf,
        mpc=mpc,
        driver=driver,
        allocation=allocation,
        corridor=corridor,
    )


def load_scenario(path: str | Path, overrides: dict | None = None) -> ScenarioConfig:
    """Load a scenario file; `overrides` replaces dotted keys before validation."""
    p = resolve_scenario_path(path)
    with open(p, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    if raw is None:
        raise ScenarioError(f"empty scenario file: {p}")
    if overrides:
        for dotted, value in overrides.items():
            _apply_override(raw, dotted, value)
    return scenario_from_dict(raw)


def _apply_override(raw: dict, dotted: str, value):
    keys = dotted.split(".")
    node = raw
    for key in keys[:-1]:
        nxt = node.get(key)
        if not isinstance(nxt, dict):
            nxt = {}
            node[key] = nxt
        node = nxt
    node[keys[-1]] = value


def bundled_scenario_names() -> list[str]:
    root = importlib.resources.files("codrive") / "scenarios"
    return sorted(p.name[: -len(".scenario")] for p in root.iterdir()
                  if p.name.endswith(".scenario"))


def resolve_scenario_path(path: str | Path) -> Path:
    """Accept a filesystem path or the bare name of a bundled scenario."""
    p = Path(path)
    if p.exists():
        return p
    candidate = importlib.resources.files("codrive") / "scenarios" / f"{path}.scenario"
    if candidate.is_file():
        return Path(str(candidate))
    raise ScenarioError(f"scenario not found: {path}")
