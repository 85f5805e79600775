"""Open-system fidelity workbench for rare-earth-ion two-qubit gates."""

from __future__ import annotations

from ._kernels import BACKEND, HAVE_NUMBA
from .lindblad import GateSchedule, LindbladTerm, Segment, build_liouvillian, evolve, ideal_propagator
from .perturbation import (
    QuadratureConfig,
    average_gate_fidelity,
    entanglement_fidelity,
    eps_H_first_order_nonhermitian,
    eps_HH_second_order,
    eps_L_first_order,
    eps_LH_second_order,
    perturbative_breakdown,
)
from .reports import ErrorBreakdown, FidelityReport

__all__ = [
    "BACKEND",
    "HAVE_NUMBA",
    "ErrorBreakdown",
    "FidelityReport",
    "GateSchedule",
    "LindbladTerm",
    "QuadratureConfig",
    "Segment",
    "average_gate_fidelity",
    "build_liouvillian",
    "entanglement_fidelity",
    "eps_HH_second_order",
    "eps_H_first_order_nonhermitian",
    "eps_LH_second_order",
    "eps_L_first_order",
    "evolve",
    "ideal_propagator",
    "perturbative_breakdown",
]
