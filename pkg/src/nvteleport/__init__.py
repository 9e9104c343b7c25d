"""Density-matrix simulator of quantum teleportation between two NV-center nodes."""

__version__ = "0.1.0"

from .nv import ModelParams, NuclearPopulations, ideal_params
from .protocol import SourceState, BsmOutcome, teleport_analytic, teleport_once
from .experiments import run_teleportation, bsm_benchmark, calibration_sweep

__all__ = [
    "ModelParams", "NuclearPopulations", "ideal_params", "SourceState", "BsmOutcome",
    "teleport_analytic", "teleport_once", "run_teleportation", "bsm_benchmark", "calibration_sweep",
]
