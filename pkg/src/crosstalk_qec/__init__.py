"""Hybrid stabilizer/MPS simulation of surface-code memory under coherent ZZ crosstalk."""

from .circuits import Circuit, SurfaceCodeLayout, build_layout, build_memory_circuit, logical_operator
from .decoder import DetectorGraph, Decoder, brute_force_match, build_detector_graph, decode
from .harness import (
    ExperimentSummary,
    RunConfig,
    ShotResult,
    estimate_PL,
    run_shot,
    schmidt_report,
    sweep,
    truncation_study,
)
from .hybrid import HybridState
from .mps import MatrixProductState
from .noise import NoiseConfig
from .pauli import PauliString
from .tableau import CliffordTableau

__version__ = "0.1.0"
