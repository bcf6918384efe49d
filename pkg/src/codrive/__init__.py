"""Human-machine adaptive shared control simulator for degraded automation."""
from ._kernels import IMPL_NAME as kernel_backend
from .authority import AllocationParams, FuzzySets, RuleBase, allocate, fis_alpha
from .controllers import DriverParams, MpcConfig, Reference, driver_lag_step
from .dynamics import ControlVector, VehicleParams, VehicleState
from .engine import NumericalAbort, Simulation, SimulationResult, run
from .faults import FaultProfile, inject
from .prediction import CtraState, PredictionConfig, ctra_predict
from .risk import ApfParams, DpfParams, RiskReport, TaskWeights
from .road import RoadModel
from .safearea import Obstacle, SafeArea, Triangulation, find_corridor, triangulate
from .scenario import ScenarioConfig, ScenarioError, load_scenario

__version__ = "0.1.0"

__all__ = [
    "AllocationParams", "ApfParams", "ControlVector", "CtraState", "DpfParams",
    "DriverParams", "FaultProfile", "FuzzySets", "MpcConfig", "NumericalAbort",
    "Obstacle", "PredictionConfig", "Reference", "RiskReport", "RoadModel",
    "RuleBase", "SafeArea", "ScenarioConfig", "ScenarioError", "Simulation",
    "SimulationResult", "TaskWeights", "Triangulation", "VehicleParams",
    "VehicleState", "allocate", "ctra_predict", "driver_lag_step", "find_corridor",
    "fis_alpha", "inject", "kernel_backend", "load_scenario", "run", "triangulate",
]
