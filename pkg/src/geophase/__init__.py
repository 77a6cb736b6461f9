"""Exact circuit simulation of the geometric phase around a conical intersection."""

from .circuit import Circuit, Gate, GateKind, MeasureBasis, build_protocol, to_qasm, transpile
from .engine import PhaseRecord, StateVector, measure_phase
from .model import ModelParams, VibronicSystem

__all__ = [
    "Circuit", "Gate", "GateKind", "MeasureBasis", "ModelParams", "PhaseRecord",
    "StateVector", "VibronicSystem", "build_protocol", "measure_phase", "to_qasm", "transpile",
]
__version__ = "0.1.0"
