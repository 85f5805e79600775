"""Magnetic dipole-dipole phase gate between two rare-earth ions.

Each ion carries four levels ordered (up, down, up', down') = (0, 1, 2, 3).
The qubit is stored in the passive ground pair (up, down). Optical pi pulses
move both states to the active excited pair (up', down'), whose large
g-factors make the ions interact. The ions then interact for T_int and are
pulsed back.

Conventions (hbar = 1, rates and couplings in rad/s):

* activation Hamiltonian per ion: (Omega/2)(|up'><up| + |down'><down| + h.c.)
* ideal interaction: H_I = -J_par Z'Z'; transverse error: J_x X'X' + J_y Y'Y'
  with Pauli operators acting on the active pair
* ground and excited pure dephasing use (|down><down| - |up><up|)/2, i.e. the
  Pauli Z of the pair scaled by one half
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import constants as const
from .errors import PhysicsWarning, ValidationError
from .lindblad import GateSchedule, LindbladTerm, Segment, evolve, ideal_propagator
from .operators import embed, kron, phase_insensitive_overlap, transition
from .perturbation import (
    DEFAULT_QUADRATURE,
    QuadratureConfig,
    average_gate_fidelity,
    entanglement_breakdown,
    perturbative_breakdown,
)
from .reports import ErrorBreakdown, FidelityReport

UP, DOWN, UP_ACTIVE, DOWN_ACTIVE = 0, 1, 2, 3
ION_DIM = 4
# qubit basis (up up, up down, down up, down down) inside the 16-dim space
COMPUTATIONAL = (UP * ION_DIM + UP, UP * ION_DIM + DOWN, DOWN * ION_DIM + UP, DOWN * ION_DIM + DOWN)

SECOND_ORDER_COEFFICIENT = (32.0 * (2.0 - math.sqrt(2.0)) - math.pi**2) / 64.0
VALIDITY_THRESHOLD = 0.1


@dataclass(frozen=True)
class DipolarRates:
    """Decay and dephasing rates in rad/s."""

    gamma1_up: float = const.hz(const.YB_GAMMA1_HZ)  # up' -> up optical decay
    gamma1_down: float = const.hz(const.YB_GAMMA1_HZ)  # down' -> down optical decay
    gamma2: float = const.hz(const.YB_GAMMA2_HZ)  # ground spin relaxation
    gamma3: float = const.hz(const.YB_GAMMA2_HZ)  # excited spin relaxation
    gamma4: float = const.hz(const.YB_GAMMA4_HZ)  # ground pure dephasing
    gamma5: float = const.hz(const.YB_GAMMA5_HZ)  # excited pure dephasing

    def __post_init__(self) -> None:
        for name, value in self.as_dict().items():
            if not (math.isfinite(value) and value >= 0):
                raise ValidationError(f"{name} must be finite and >= 0, got {value}")

    def as_dict(self) -> dict[str, float]:
        return {
            "gamma1_up": self.gamma1_up,
            "gamma1_down": self.gamma1_down,
            "gamma2": self.gamma2,
            "gamma3": self.gamma3,
            "gamma4": self.gamma4,
            "gamma5": self.gamma5,
        }

    def scaled(self, factor: float) -> DipolarRates:
        return DipolarRates(**{k: v * factor for k, v in self.as_dict().items()})

    @classmethod
    def zero(cls) -> DipolarRates:
        return cls(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class DipolarParams:
    """Inputs of the dipolar gate. ``r`` in metres, ``omega`` and ``splitting`` in rad/s."""

    r: float
    g_par: float = const.YB_G_PAR
    g_perp: float = const.YB_G_PERP
    omega: float = 1.0e7
    rates: DipolarRates = field(default_factory=DipolarRates)
    splitting: float = const.hz(const.YB_HYPERFINE_HZ)
    enforce_splitting_guard: bool = True

    def __post_init__(self) -> None:
        if not (self.r > 0 and math.isfinite(self.r)):
            raise ValidationError(f"ion separation must be positive, got {self.r}")
        if not (self.omega > 0 and math.isfinite(self.omega)):
            raise ValidationError(f"Rabi frequency must be positive, got {self.omega}")
        if self.g_par < 0 or self.g_perp < 0:
            raise ValidationError("g-factors must be non-negative")
        if self.enforce_splitting_guard and self.splitting < 10.0 * self.omega:
            raise ValidationError(
                f"hyperfine splitting {self.splitting:.3e} rad/s is below 10 x Rabi frequency {self.omega:.3e}"
            )

    def with_(self, **changes) -> DipolarParams:
        return replace(self, **changes)


@dataclass(frozen=True)
class DipolarCouplings:
    """Couplings in joules, durations in seconds."""

    J_par: float
    J_x: float
    J_y: float
    T_act: float
    T_int: float

    @property
    def T_g(self) -> float:
        return 2.0 * self.T_act + self.T_int

    @property
    def J_par_rad(self) -> float:
        return self.J_par / const.HBAR

    @property
    def J_x_rad(self) -> float:
        return self.J_x / const.HBAR

    @property
    def J_y_rad(self) -> float:
        return self.J_y / const.HBAR


def couplings_from_params(p: DipolarParams) -> DipolarCouplings:
    """Point-dipole couplings for ions aligned along the crystal symmetry axis."""
    if p.r == 0:
        raise ValidationError("r = 0 is singular")
    prefactor = const.MU0 * const.MU_B**2 / (math.pi * p.r**3)
    j_par = prefactor * p.g_par**2 / 8.0
    j_perp = prefactor * p.g_perp**2 / 16.0
    t_act = math.pi / p.omega
    if j_par <= 0:
        raise ValidationError("longitudinal coupling must be positive")
    t_int = const.HBAR * math.pi / (4.0 * j_par)
    return DipolarCouplings(j_par, j_perp, j_perp, t_act, t_int)


def _pair_paulis() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    x = transition(ION_DIM, UP_ACTIVE, DOWN_ACTIVE) + transition(ION_DIM, DOWN_ACTIVE, UP_ACTIVE)
    y = -1j * transition(ION_DIM, UP_ACTIVE, DOWN_ACTIVE) + 1j * transition(ION_DIM, DOWN_ACTIVE, UP_ACTIVE)
    z = transition(ION_DIM, UP_ACTIVE, UP_ACTIVE) - transition(ION_DIM, DOWN_ACTIVE, DOWN_ACTIVE)
    return x, y, z


def activation_hamiltonian(omega: float) -> np.ndarray:
    single = 0.5 * omega * (
        transition(ION_DIM, UP_ACTIVE, UP)
        + transition(ION_DIM, UP, UP_ACTIVE)
        + transition(ION_DIM, DOWN_ACTIVE, DOWN)
        + transition(ION_DIM, DOWN, DOWN_ACTIVE)
    )
    dims = (ION_DIM, ION_DIM)
    return embed(single, dims, 0) + embed(single, dims, 1)


def interaction_hamiltonians(c: DipolarCouplings) -> tuple[np.ndarray, np.ndarray]:
    """(ideal longitudinal part, transverse error part) in rad/s."""
    x, y, z = _pair_paulis()
    ideal = -c.J_par_rad * kron(z, z)
    error = c.J_x_rad * kron(x, x) + c.J_y_rad * kron(y, y)
    return ideal, error


def md_lindblad_terms(rates: DipolarRates) -> list[LindbladTerm]:
    half_z_ground = 0.5 * (transition(ION_DIM, DOWN, DOWN) - transition(ION_DIM, UP, UP))
    half_z_active = 0.5 * (transition(ION_DIM, DOWN_ACTIVE, DOWN_ACTIVE) - transition(ION_DIM, UP_ACTIVE, UP_ACTIVE))
    single = [
        (rates.gamma1_up, transition(ION_DIM, UP, UP_ACTIVE), "optical decay up'"),
        (rates.gamma1_down, transition(ION_DIM, DOWN, DOWN_ACTIVE), "optical decay down'"),
        (rates.gamma2, transition(ION_DIM, UP, DOWN), "ground spin relaxation"),
        (rates.gamma3, transition(ION_DIM, UP_ACTIVE, DOWN_ACTIVE), "excited spin relaxation"),
        (rates.gamma4, half_z_ground, "ground dephasing"),
        (rates.gamma5, half_z_active, "excited dephasing"),
    ]
    dims = (ION_DIM, ION_DIM)
    terms = []
    for ion in (0, 1):
        for rate, op, label in single:
            terms.append(LindbladTerm(rate, embed(op, dims, ion), f"ion{ion + 1} {label}"))
    return terms


def _relaxation_kraus() -> list[np.ndarray]:
    ground = transition(ION_DIM, UP, UP) + transition(ION_DIM, DOWN, DOWN)
    return [ground, transition(ION_DIM, UP, UP_ACTIVE), transition(ION_DIM, DOWN, DOWN_ACTIVE)]


def relax_active_levels(rho: np.ndarray) -> np.ndarray:
    """Let any population left in up'/down' decay fully to up/down.

    This is the long-time limit of optical decay. It turns the leaky gate map
    into a trace-preserving channel on the qubit levels.
    """
    single = _relaxation_kraus()
    out = np.zeros_like(rho)
    for a in single:
        for b in single:
            k = kron(a, b)
            out = out + k @ rho @ k.conj().T
    return out


def plus_plus_state() -> np.ndarray:
    plus = np.zeros(ION_DIM, dtype=np.complex128)
    plus[UP] = plus[DOWN] = 1.0 / math.sqrt(2.0)
    return kron(plus, plus)


@dataclass(frozen=True)
class DipolarModel:
    schedule: GateSchedule
    terms: list[LindbladTerm]
    psi0: np.ndarray
    couplings: DipolarCouplings


def build_md_schedule(p: DipolarParams, include_activation_interaction: bool = False) -> DipolarModel:
    """Activation, interaction, deactivation on the 16-level two-ion space.

    With ``include_activation_interaction`` the full dipolar Hamiltonian is
    also switched on during both pulses; that variant is the exact oracle's
    model and is not an ideal schedule in the perturbative sense.
    """
    c = couplings_from_params(p)
    h_act = activation_hamiltonian(p.omega)
    h_ideal, h_err = interaction_hamiltonians(c)
    if include_activation_interaction:
        pulse = Segment(c.T_act, h_act, h_ideal + h_err, 1.0, "activation+interaction")
        unpulse = Segment(c.T_act, h_act, h_ideal + h_err, 1.0, "deactivation+interaction")
    else:
        pulse = Segment(c.T_act, h_act, None, 1.0, "activation")
        unpulse = Segment(c.T_act, h_act, None, 1.0, "deactivation")
    middle = Segment(c.T_int, h_ideal, h_err, 1.0, "interaction")
    schedule = GateSchedule((pulse, middle, unpulse))
    return DipolarModel(schedule, md_lindblad_terms(p.rates), plus_plus_state(), c)


def closed_form_breakdown(p: DipolarParams) -> ErrorBreakdown:
    c = couplings_from_params(p)
    r = p.rates
    g1 = r.gamma1_up + r.gamma1_down
    eps_act = c.T_act * (7.0 / 8.0 * g1 + 13.0 / 16.0 * (r.gamma2 + r.gamma3) + 0.5 * (r.gamma4 + r.gamma5))
    eps_int = c.T_int * (g1 + 0.75 * r.gamma3 + 0.5 * r.gamma5)
    transverse = SECOND_ORDER_COEFFICIENT * (c.J_x + c.J_y) ** 2 / c.J_par**2
    return ErrorBreakdown(eps_L1=eps_act + eps_int, eps_HH2=transverse)


def md_closed_form_fidelity(p: DipolarParams) -> FidelityReport:
    """First-order dissipation plus second-order transverse coupling, in closed form."""
    c = couplings_from_params(p)
    b = closed_form_breakdown(p)
    return FidelityReport(
        scheme="md",
        fidelity=1.0 - b.total,
        gate_time=c.T_g,
        breakdown=b,
        method="closed-form",
        metadata={
            "r": p.r,
            "omega": p.omega,
            "T_act": c.T_act,
            "T_int": c.T_int,
            "J_ratio": c.J_par / c.J_x if c.J_x > 0 else math.inf,
            "off_resonant_error": off_resonant_error(p),
        },
    )


def md_perturbative_fidelity(p: DipolarParams, quad: QuadratureConfig = DEFAULT_QUADRATURE) -> FidelityReport:
    """Same error terms as the closed form, evaluated numerically by quadrature."""
    m = build_md_schedule(p)
    b = perturbative_breakdown(m.schedule, m.psi0, m.terms, quad)
    return FidelityReport("md", 1.0 - b.total, m.couplings.T_g, b, method="perturbative", metadata={"r": p.r})


def md_exact_fidelity(p: DipolarParams, include_activation_interaction: bool = True) -> FidelityReport:
    """Full Lindblad evolution of the 16-level system against the ideal output."""
    m = build_md_schedule(p, include_activation_interaction)
    ideal = build_md_schedule(p).schedule
    rho = evolve(np.outer(m.psi0, m.psi0.conj()), m.schedule, m.terms)
    target = ideal_propagator(ideal, ideal.gate_time) @ m.psi0
    fid = float(np.real(np.vdot(target, rho @ target)))
    return FidelityReport(
        "md",
        fid,
        m.couplings.T_g,
        method="exact",
        metadata={"r": p.r, "activation_interaction": include_activation_interaction},
    )


def md_average_fidelity(p: DipolarParams, quad: QuadratureConfig = DEFAULT_QUADRATURE) -> FidelityReport:
    """Average gate fidelity (4 F_ent + 1)/5 from perturbative terms on the Choi state."""
    m = build_md_schedule(p)
    b = entanglement_breakdown(m.schedule, m.terms, quad, COMPUTATIONAL)
    f_ent = 1.0 - b.total
    f_avg = average_gate_fidelity(min(max(f_ent, 0.0), 1.0), 4)
    return FidelityReport(
        "md",
        f_avg,
        m.couplings.T_g,
        b,
        method="perturbative-average",
        entanglement_fidelity=f_ent,
        average_fidelity=f_avg,
        metadata={"r": p.r},
    )


@dataclass(frozen=True)
class ValidityReport:
    norm_times_activation: float
    threshold: float

    @property
    def turning_point_warning(self) -> bool:
        return self.norm_times_activation > self.threshold

    @property
    def valid(self) -> bool:
        return not self.turning_point_warning


def md_validity_check(p: DipolarParams, threshold: float = VALIDITY_THRESHOLD, warn: bool = False) -> ValidityReport:
    """Spectral norm of the full dipolar Hamiltonian times the activation time."""
    c = couplings_from_params(p)
    ideal, err = interaction_hamiltonians(c)
    value = float(np.linalg.norm(ideal + err, 2) * c.T_act)
    report = ValidityReport(value, threshold)
    if warn and report.turning_point_warning:
        warnings.warn(
            f"interaction during activation is not negligible (|H_int| T_act = {value:.3f})",
            PhysicsWarning,
            stacklevel=2,
        )
    return report


def off_resonant_error(p: DipolarParams) -> float:
    """exp(-(pi/2)(splitting/Omega)^2), reported but never folded into F."""
    return math.exp(-0.5 * math.pi * (p.splitting / p.omega) ** 2)


def single_qubit_pulse_error(t2_optical: float = const.YB_T2O_BULK, field_tesla: float = const.YB_FIELD_TESLA) -> float:
    """T_single / T2o for a two-pulse optical single-qubit gate, T_single = 2 pi hbar/(mu_B B)."""
    t_single = 2.0 * math.pi * const.HBAR / (const.MU_B * field_tesla)
    return t_single / t2_optical


def ideal_cz_frame_overlap(p: DipolarParams) -> float:
    """|tr(CZ^dag (sqrtZ x sqrtZ) U)|/4 for the ideal gate restricted to the qubits."""
    m = build_md_schedule(p)
    u = ideal_propagator(m.schedule, m.schedule.gate_time)
    idx = list(COMPUTATIONAL)
    u_qubits = u[np.ix_(idx, idx)]
    sqrt_z = np.diag([1.0, 1j])
    corrected = np.kron(sqrt_z, sqrt_z) @ u_qubits
    cz = np.diag([1.0, 1.0, 1.0, -1.0]).astype(np.complex128)
    return phase_insensitive_overlap(cz, corrected)


__all__ = [
    "COMPUTATIONAL",
    "SECOND_ORDER_COEFFICIENT",
    "DipolarCouplings",
    "DipolarModel",
    "DipolarParams",
    "DipolarRates",
    "ValidityReport",
    "build_md_schedule",
    "closed_form_breakdown",
    "couplings_from_params",
    "ideal_cz_frame_overlap",
    "md_average_fidelity",
    "md_closed_form_fidelity",
    "md_exact_fidelity",
    "md_lindblad_terms",
    "md_perturbative_fidelity",
    "md_validity_check",
    "relax_active_levels",
    "off_resonant_error",
    "single_qubit_pulse_error",
]
