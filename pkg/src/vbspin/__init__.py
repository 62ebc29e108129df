"""Spin dynamics of a boron-vacancy electron qubit coupled to three 14N nuclei."""

__version__ = "0.1.0"

from .spin_model import (  # noqa: E402
    DerivedParams,
    HyperfineSet,
    PhysicalConstants,
    RotatingFrameModel,
    b_op,
    derive_params,
    design_time,
    rotating_hamiltonian,
)
from .pulse_control import cpmg_schedule, filters_from_schedule  # noqa: E402
from .evolution import EvolutionResult, gate_duration, propagate_lindblad, propagate_unitary  # noqa: E402
from .gates import entangling_gate, ghz_protocol, synchronous_gate  # noqa: E402
from .metrics import avg_gate_fidelity, relative_avg_gate_fidelity, state_fidelity  # noqa: E402
