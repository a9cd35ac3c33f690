"""bspsim: calibrated simulator and cost model of a tiled BSP machine.

The machine is a ladder of dual-processor boards: two parity rails plus a
rung per board.  The package models memory, point-to-point traffic,
collectives and host transfers, and regression-checks every prediction
against the measurement corpus shipped under ``assets/golden/``.
"""

from .errors import (BspsimError, ConfigError, TopologyError, RoutingError,
                     PlanError, EngineError, GoldenDataError,
                     UnknownExperimentError)
from .config import (SystemSpec, LinkSpec, load_system_spec, resolve_seed,
                     make_rng, DEFAULT_SEED)
from .topology import (Topology, TileId, MultiDevice, build_topology,
                       multi_device)
from .cost_model import (CostParams, LoadContext, IDLE, load_cost_params,
                         save_cost_params, saturation, p2p_latency,
                         transfer_bandwidth, memory_read_bandwidth,
                         memory_write_bandwidth, memory_latency,
                         host_bandwidth_cap, host_transfer,
                         calibrate_hop_line, apply_hop_calibration)
from .engine import (Message, Superstep, StepTrace, ProgramTrace,
                     run_superstep, run_program, CONTENDED, SCHEDULED)
from .collectives import (CollectiveSpec, CollectiveResult, plan, reduce_plan,
                          simulate_reduce, reduce_latency, gather_latency,
                          max_message_size, predict, BROADCAST, GATHER,
                          SCATTER, ALL_TO_ALL, REDUCE)
from .roofline import (peak_flops, achievable_flops, ridge_intensity,
                       attainable_flops, gemm_max_operand, gemm_point,
                       GemmPoint)
from .golden import GoldenData, GoldenRow, load_golden
from .experiments import Bench, default_bench, predict_metrics
from .verify import (CheckResult, VerifyReport, verify_analytic,
                     verify_empirical, format_report)
from .sweep import SweepResult, available_sweeps, run_sweep

__version__ = "0.1.0"

__all__ = [
    "BspsimError", "ConfigError", "TopologyError", "RoutingError",
    "PlanError", "EngineError", "GoldenDataError", "UnknownExperimentError",
    "SystemSpec", "LinkSpec", "load_system_spec", "resolve_seed", "make_rng",
    "DEFAULT_SEED",
    "Topology", "TileId", "MultiDevice", "build_topology", "multi_device",
    "CostParams", "LoadContext", "IDLE", "load_cost_params",
    "save_cost_params", "saturation", "p2p_latency", "transfer_bandwidth",
    "memory_read_bandwidth", "memory_write_bandwidth", "memory_latency",
    "host_bandwidth_cap", "host_transfer", "calibrate_hop_line",
    "apply_hop_calibration",
    "Message", "Superstep", "StepTrace", "ProgramTrace", "run_superstep",
    "run_program", "CONTENDED", "SCHEDULED",
    "CollectiveSpec", "CollectiveResult", "plan", "reduce_plan",
    "simulate_reduce", "reduce_latency", "gather_latency",
    "max_message_size", "predict", "BROADCAST", "GATHER", "SCATTER",
    "ALL_TO_ALL", "REDUCE",
    "peak_flops", "achievable_flops", "ridge_intensity", "attainable_flops",
    "gemm_max_operand", "gemm_point", "GemmPoint",
    "GoldenData", "GoldenRow", "load_golden",
    "Bench", "default_bench", "predict_metrics",
    "CheckResult", "VerifyReport", "verify_analytic",
    "verify_empirical", "format_report",
    "SweepResult", "available_sweeps", "run_sweep",
    "__version__",
]
