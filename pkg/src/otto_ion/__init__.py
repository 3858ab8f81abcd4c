"""Simulator for a single trapped-ion quantum Otto engine."""

from .model import EngineParams, ParameterError, ZConvention
from .thermo import DegenerateCycleError, StrokeLedger
from .engine import CycleRecord, run_cycle, sweep_efficiency

__all__ = [
    "CycleRecord",
    "DegenerateCycleError",
    "EngineParams",
    "ParameterError",
    "StrokeLedger",
    "ZConvention",
    "run_cycle",
    "sweep_efficiency",
]
