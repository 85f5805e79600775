"""Result containers returned by the gate models."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import Any


@dataclass(frozen=True)
class ErrorBreakdown:
    """Infidelity split by perturbative order and origin.

    ``total`` is always the sum of the four components. Terms that a model
    does not compute are reported as zero.
    """

    eps_L1: float = 0.0
    eps_H1: float = 0.0
    eps_HH2: float = 0.0
    eps_LH2: float = 0.0

    @property
    def total(self) -> float:
        return self.eps_L1 + self.eps_H1 + self.eps_HH2 + self.eps_LH2

    def __post_init__(self) -> None:
        for f in fields(self):
            value = getattr(self, f.name)
            if not math.isfinite(value):
                raise ValueError(f"{f.name} is not finite: {value}")
        if self.eps_L1 < -1e-12:
            raise ValueError(f"eps_L1 must be non-negative, got {self.eps_L1}")

    def as_dict(self) -> dict[str, float]:
        return {
            "eps_L1": self.eps_L1,
            "eps_H1": self.eps_H1,
            "eps_HH2": self.eps_HH2,
            "eps_LH2": self.eps_LH2,
            "eps_total": self.total,
        }


@dataclass(frozen=True)
class FidelityReport:
    """Fidelity of one gate evaluation plus its bookkeeping."""

    scheme: str
    fidelity: float
    gate_time: float
    breakdown: ErrorBreakdown = field(default_factory=ErrorBreakdown)
    method: str = "closed-form"
    entanglement_fidelity: float | None = None
    average_fidelity: float | None = None
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not math.isfinite(self.fidelity):
            raise ValueError("fidelity is not finite")
        if not self.gate_time > 0:
            raise ValueError(f"gate time must be positive, got {self.gate_time}")

    @property
    def infidelity(self) -> float:
        return 1.0 - self.fidelity

    @property
    def in_unit_interval(self) -> bool:
        return 0.0 <= self.fidelity <= 1.0

    def row(self) -> dict[str, Any]:
        """Flat dictionary used for CSV output."""
        out: dict[str, Any] = {
            "fidelity": self.fidelity,
            "gate_time": self.gate_time,
            "method": self.method,
        }
        out.update(self.breakdown.as_dict())
        out["entanglement_fidelity"] = self.entanglement_fidelity
        out["average_fidelity"] = self.average_fidelity
        for key, value in self.metadata.items():
            if isinstance(value, (int, float, str, bool)) or value is None:
                out[key] = value
        return out
