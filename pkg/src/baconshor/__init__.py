"""Universal fault-tolerant gates on 2D Bacon-Shor subsystem codes.

Gadget builders for C^kZ constructions and Steane error correction, static
pieceable-fault-tolerance analysis, exact two-fault exREC counting with
phase-coherent Pauli sums, and resource estimates for a modular ion-trap
timing model.
"""

from .code import CodeSpec, build, classify, codespace_phase_eval, syndrome_of
from .circuits import Circuit, GateSpec
from .pauli import (
    DiagonalCliffordFrame,
    PauliString,
    PauliSum,
    commutes,
    conjugate,
    expand,
    multiply,
    split_measurement,
)
from .noise import NoiseModel, FaultEvent, enumerate_faults, build_decoder_table

__all__ = [
    "CodeSpec", "build", "classify", "codespace_phase_eval", "syndrome_of",
    "Circuit", "GateSpec",
    "DiagonalCliffordFrame", "PauliString", "PauliSum",
    "commutes", "conjugate", "expand", "multiply", "split_measurement",
    "NoiseModel", "FaultEvent", "enumerate_faults", "build_decoder_table",
]

__version__ = "0.1.0"
