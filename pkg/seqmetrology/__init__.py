"""
seqmetrology
Ancilla-free sequential quantum metrology: peripheral spectra, asymptotic
QFI, Heisenberg-limit conditions and interleaving-control synthesis
"""

from .analysis import AnalysisReport, analyze
from .channels import DensityMatrix, KrausChannel, ParamChannel, TransitionMatrix, kraus_to_transition
from .conditions import (
    HlStatus,
    check_corollary1,
    check_corollary2,
    check_theorem2_conditions,
    hnks_check,
)
from .control_synth import ControlSolution, synthesize_control, verify_control
from .errors import MetrologyError
from .qfi import asymptotic_qfi, exact_sequence_qfi, qfi_mixed, sequence_qfi_sweep
from .scenarios import ScenarioName, ScenarioSpec
from .spectral import peripheral_spectrum

__version__ = "0.1.0"

__all__ = [
    "AnalysisReport",
    "ControlSolution",
    "DensityMatrix",
    "HlStatus",
    "KrausChannel",
    "MetrologyError",
    "ParamChannel",
    "ScenarioName",
    "ScenarioSpec",
    "TransitionMatrix",
    "analyze",
    "asymptotic_qfi",
    "check_corollary1",
    "check_corollary2",
    "check_theorem2_conditions",
    "exact_sequence_qfi",
    "hnks_check",
    "kraus_to_transition",
    "peripheral_spectrum",
    "qfi_mixed",
    "sequence_qfi_sweep",
    "synthesize_control",
    "verify_control",
]
