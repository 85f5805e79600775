"""Perturbative gate infidelity from the ideal evolution alone.

Every quantity here is built from d-dimensional state vectors propagated by
the ideal piecewise-constant Hamiltonian. No d^2 superoperator is formed, so
the cost stays at dense d x d algebra per segment plus O(d^2) per node.

Two-time correlators use the identity

    <A(t) B(t')> = <psi(t)| A U(t, t') B |psi(t')>
                 = <w_{A^dag}(t) | w_B(t')>,   w_O(t) = U(t, 0)^dag O |psi(t)>,

which turns every ordered double integral over 0 <= t' <= t <= T into inner
products of back-propagated vectors evaluated at Gauss nodes.
"""

from __future__ import annotations

import warnings
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, QuadratureWarning
from .lindblad import GateSchedule, LindbladTerm
from .operators import as_ket, as_operator, hermitian_part
from .reports import ErrorBreakdown

__all__ = [
    "ErrorBreakdown",
    "QuadratureConfig",
    "expectation_trajectory",
    "eps_L_first_order",
    "eps_H_first_order_nonhermitian",
    "eps_HH_second_order",
    "eps_LH_second_order",
    "perturbative_breakdown",
    "choi_input_state",
    "entanglement_breakdown",
    "entanglement_fidelity",
    "average_gate_fidelity",
]


@dataclass(frozen=True)
class QuadratureConfig:
    """Fixed-order Gauss-Legendre rule applied per segment and per integration axis.

    With ``check_convergence`` each term is recomputed at half the order and a
    ``QuadratureWarning`` carrying the estimate is raised when the two differ
    by more than ``tolerance_target``.
    """

    points_per_segment: int = 32
    tolerance_target: float = 1e-9
    check_convergence: bool = False
    scheme: str = "gauss-legendre"

    def __post_init__(self) -> None:
        if int(self.points_per_segment) < 8:
            raise ValueError("points_per_segment must be at least 8")
        if self.scheme != "gauss-legendre":
            raise ValueError(f"unsupported quadrature scheme {self.scheme!r}")
        if not self.tolerance_target > 0:
            raise ValueError("tolerance_target must be positive")

    def halved(self) -> QuadratureConfig:
        return QuadratureConfig(max(8, self.points_per_segment // 2), self.tolerance_target, False)


DEFAULT_QUADRATURE = QuadratureConfig()


def _unit_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


class _Trajectory:
    """Ideal trajectory of one input state, evaluated at arbitrary local times."""

    def __init__(self, schedule: GateSchedule, psi0, quad: QuadratureConfig):
        self.schedule = schedule
        self.quad = quad
        psi0 = as_ket(psi0, "initial state")
        if psi0.size != schedule.dim:
            raise DimensionError(f"state of size {psi0.size} for schedule of size {schedule.dim}")
        self.nodes, self.weights = _unit_rule(int(quad.points_per_segment))
        self.eig: list[tuple[np.ndarray, np.ndarray]] = []
        self.u_start: list[np.ndarray] = []
        self.psi_start: list[np.ndarray] = []
        u = np.eye(schedule.dim, dtype=np.complex128)
        psi = psi0.copy()
        for seg in schedule:
            energies, vectors = np.linalg.eigh(seg.hamiltonian)
            self.eig.append((energies, vectors))
            self.u_start.append(u)
            self.psi_start.append(psi)
            step = (vectors * np.exp(-1j * energies * seg.duration)) @ vectors.conj().T
            u = step @ u
            psi = step @ psi
        self.u_final = u
        self.psi_final = psi

    def states(self, k: int, taus: np.ndarray) -> np.ndarray:
        """psi(s_k + tau) as rows, for local times ``taus`` in segment k."""
        energies, vectors = self.eig[k]
        coeff = vectors.conj().T @ self.psi_start[k]
        phases = np.exp(-1j * np.outer(taus, energies))
        return (phases * coeff) @ vectors.T

    def back(self, k: int, taus: np.ndarray, rows: np.ndarray) -> np.ndarray:
        """U(s_k + tau, 0)^dag applied to each row of ``rows``."""
        energies, vectors = self.eig[k]
        local = (rows @ vectors.conj()) * np.exp(1j * np.outer(taus, energies))
        return (local @ vectors.T) @ self.u_start[k].conj()

    def regular(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        dur = self.schedule.segments[k].duration
        return self.nodes * dur, self.weights * dur


def _apply(op: np.ndarray, rows: np.ndarray) -> np.ndarray:
    return rows @ op.T


def _expect(op: np.ndarray, rows: np.ndarray) -> np.ndarray:
    return np.einsum("ni,ni->n", rows.conj(), _apply(op, rows))


def _single_integral(traj: _Trajectory, integrand: Callable[[int, np.ndarray, np.ndarray], np.ndarray]) -> complex:
    total = 0.0 + 0.0j
    for k in range(len(traj.schedule)):
        taus, w = traj.regular(k)
        total += np.sum(w * integrand(k, taus, traj.states(k, taus)))
    return total


VectorFn = Callable[[int, np.ndarray, np.ndarray], np.ndarray]


def _ordered_double(traj: _Trajectory, outer: VectorFn, inner: VectorFn) -> complex:
    """Integral of <a(t)|b(t')> over 0 <= t' <= t <= T_g.

    ``outer(k, taus, states)`` returns the rows a(t) and ``inner`` the rows
    b(t'). Segment pairs with t' in an earlier segment factorise into a
    product of single integrals; the diagonal triangle uses t' = s_k + tau*u.
    """
    n = traj.nodes.size
    earlier = None
    total = 0.0 + 0.0j
    for k in range(len(traj.schedule)):
        taus, w = traj.regular(k)
        states = traj.states(k, taus)
        a = outer(k, taus, states)
        a_int = (w[:, None] * a).sum(axis=0)
        if earlier is not None:
            total += np.vdot(a_int, earlier)
        inner_taus = np.outer(taus, traj.nodes).ravel()
        inner_states = traj.states(k, inner_taus)
        b = inner(k, inner_taus, inner_states).reshape(n, n, -1)
        tri_w = np.outer(taus, traj.weights)
        b_int = np.einsum("ab,abi->ai", tri_w, b)
        total += np.sum(w * np.einsum("ai,ai->a", a.conj(), b_int))
        b_reg = inner(k, taus, states)
        seg_int = (w[:, None] * b_reg).sum(axis=0)
        earlier = seg_int if earlier is None else earlier + seg_int
    return total


def _checked(name: str, compute: Callable[[QuadratureConfig], float], quad: QuadratureConfig) -> float:
    value = compute(quad)
    if quad.check_convergence:
        coarse = compute(quad.halved())
        gap = abs(value - coarse)
        if gap > quad.tolerance_target * max(1.0, abs(value)):
            warnings.warn(
                f"{name}: quadrature estimate {value:.6e} differs from half-order value by "
                f"{gap:.2e} (target {quad.tolerance_target:.1e})",
                QuadratureWarning,
                stacklevel=3,
            )
    return value


def _error_operator(traj: _Trajectory, k: int) -> np.ndarray:
    """delta * (H~_e + H~_e^dag)/2 for segment k."""
    seg = traj.schedule.segments[k]
    return seg.delta * hermitian_part(seg.error_hamiltonian)


def _check_terms(terms: Sequence[LindbladTerm], dim: int) -> list[LindbladTerm]:
    out = list(terms)
    for t in out:
        if not isinstance(t, LindbladTerm):
            raise TypeError("terms must be LindbladTerm instances")
        if t.dim != dim:
            raise DimensionError(f"collapse operator '{t.label}' has size {t.dim}, system {dim}")
    return out


def expectation_trajectory(schedule: GateSchedule, psi0, obs, t) -> complex | np.ndarray:
    """<psi(t)|O|psi(t)> along the ideal evolution; ``t`` may be an array."""
    obs = as_operator(obs, "observable")
    traj = _Trajectory(schedule, psi0, DEFAULT_QUADRATURE)
    times = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty(times.shape, dtype=np.complex128)
    edges = schedule.boundaries
    for idx, time in np.ndenumerate(times):
        time = schedule.check_time(float(time))
        k = min(int(np.searchsorted(edges, time, side="right")) - 1, len(schedule) - 1)
        state = traj.states(k, np.array([time - edges[k]]))
        out[idx] = _expect(obs, state)[0]
    return out[0] if np.ndim(t) == 0 else out


def eps_L_first_order(
    schedule: GateSchedule, psi0, terms: Sequence[LindbladTerm], quad: QuadratureConfig = DEFAULT_QUADRATURE
) -> float:
    """Sum_k gamma_k * integral of (<L^dag L> - |<L>|^2) over the ideal trajectory."""
    terms = _check_terms(terms, schedule.dim)

    def compute(q: QuadratureConfig) -> float:
        traj = _Trajectory(schedule, psi0, q)
        total = 0.0
        for term in terms:
            if term.rate == 0.0:
                continue
            op = term.collapse
            ldl = op.conj().T @ op

            def variance(k, taus, states, op=op, ldl=ldl):
                return _expect(ldl, states).real - np.abs(_expect(op, states)) ** 2

            total += term.rate * _single_integral(traj, variance).real
        return float(total)

    return _checked("eps_L1", compute, quad)


def eps_H_first_order_nonhermitian(
    schedule: GateSchedule, psi0, quad: QuadratureConfig = DEFAULT_QUADRATURE
) -> float:
    """-2 * integral of Im<delta H~_e>; vanishes for Hermitian perturbations."""
    if all(np.array_equal(s.error_hamiltonian, s.error_hamiltonian.conj().T) for s in schedule):
        return 0.0

    def compute(q: QuadratureConfig) -> float:
        traj = _Trajectory(schedule, psi0, q)

        def imag_part(k, taus, states):
            seg = schedule.segments[k]
            return seg.delta * _expect(seg.error_hamiltonian, states).imag

        return float(-2.0 * _single_integral(traj, imag_part).real)

    return _checked("eps_H1", compute, quad)


def eps_HH_second_order(
    schedule: GateSchedule, psi0, quad: QuadratureConfig = DEFAULT_QUADRATURE
) -> float:
    """2 * ordered double integral of Re(<H_e(t) H_e(t')> - <H_e(t)><H_e(t')>).

    H_e is the Hermitian part of delta * H~_e.
    """

    def compute(q: QuadratureConfig) -> float:
        traj = _Trajectory(schedule, psi0, q)

        def back_h(k, taus, states):
            return traj.back(k, taus, _apply(_error_operator(traj, k), states))

        def mean_h(k, taus, states):
            return _expect(_error_operator(traj, k), states).real[:, None].astype(np.complex128)

        two_time = _ordered_double(traj, back_h, back_h)
        disconnected = _ordered_double(traj, mean_h, mean_h)
        return float(2.0 * (two_time - disconnected).real)

    return _checked("eps_HH2", compute, quad)


def eps_LH_second_order(
    schedule: GateSchedule, psi0, terms: Sequence[LindbladTerm], quad: QuadratureConfig = DEFAULT_QUADRATURE
) -> float:
    """Mixed dissipation / coherent-error term at second order.

    For each channel, with H the Hermitian part of delta * H~_e and t' <= t,

        gamma * Im[ <H(t) L^dag L(t')> - 2 <H(t) L(t')><L^dag(t')>
                  + <L^dag L(t) H(t')> - 2 <L(t) H(t')><L^dag(t)> ]

    integrated over the ordered triangle.
    """
    terms = _check_terms(terms, schedule.dim)

    def compute(q: QuadratureConfig) -> float:
        traj = _Trajectory(schedule, psi0, q)
        if all(not np.any(_error_operator(traj, k)) for k in range(len(schedule))):
            return 0.0

        def back_h(k, taus, states):
            return traj.back(k, taus, _apply(_error_operator(traj, k), states))

        total = 0.0
        for term in terms:
            if term.rate == 0.0:
                continue
            op = term.collapse
            op_dag = op.conj().T
            ldl = op_dag @ op

            def back_ldl(k, taus, states, ldl=ldl):
                return traj.back(k, taus, _apply(ldl, states))

            def back_l_weighted(k, taus, states, op=op):
                mean = _expect(op, states)
                return traj.back(k, taus, _apply(op, states)) * mean.conj()[:, None]

            def back_ldag_weighted(k, taus, states, op=op, op_dag=op_dag):
                mean = _expect(op, states)
                return traj.back(k, taus, _apply(op_dag, states)) * mean[:, None]

            first = _ordered_double(traj, back_h, back_ldl) - 2.0 * _ordered_double(traj, back_h, back_l_weighted)
            second = _ordered_double(traj, back_ldl, back_h) - 2.0 * _ordered_double(
                traj, back_ldag_weighted, back_h
            )
            total += term.rate * (first.imag + second.imag)
        return float(total)

    return _checked("eps_LH2", compute, quad)


def perturbative_breakdown(
    schedule: GateSchedule,
    psi0,
    terms: Sequence[LindbladTerm],
    quad: QuadratureConfig = DEFAULT_QUADRATURE,
    second_order: bool = True,
) -> ErrorBreakdown:
    """All implemented error terms for one input state."""
    return ErrorBreakdown(
        eps_L1=eps_L_first_order(schedule, psi0, terms, quad),
        eps_H1=eps_H_first_order_nonhermitian(schedule, psi0, quad),
        eps_HH2=eps_HH_second_order(schedule, psi0, quad) if second_order else 0.0,
        eps_LH2=eps_LH_second_order(schedule, psi0, terms, quad) if second_order else 0.0,
    )


def choi_input_state(dim: int, computational: Sequence[int]) -> np.ndarray:
    """(1/2) sum_i |q_i>_system |i>_ancilla for the four computational states q_i.

    With the ordering (00, 01, 10, 11) this is two Bell pairs, one per qubit,
    with both ancilla qubits appended after the system.
    """
    comp = [int(c) for c in computational]
    if len(comp) != 4:
        raise DimensionError(f"entanglement fidelity needs D = 4 computational states, got {len(comp)}")
    if len(set(comp)) != 4 or min(comp) < 0 or max(comp) >= dim:
        raise DimensionError(f"computational indices {comp} invalid for dimension {dim}")
    out = np.zeros(dim * 4, dtype=np.complex128)
    for a, q in enumerate(comp):
        out[q * 4 + a] = 0.5
    return out


def _doubled(schedule: GateSchedule, terms: Sequence[LindbladTerm]):
    eye = np.eye(4, dtype=np.complex128)
    ext_terms = [LindbladTerm(t.rate, np.kron(t.collapse, eye), t.label) for t in terms]
    return schedule.tensor_identity(4), ext_terms


def entanglement_breakdown(
    schedule: GateSchedule,
    terms: Sequence[LindbladTerm],
    quad: QuadratureConfig = DEFAULT_QUADRATURE,
    computational: Sequence[int] | None = None,
    second_order: bool = True,
) -> ErrorBreakdown:
    """Error terms for the Choi input on the system-plus-ancilla space."""
    if computational is None:
        if schedule.dim != 4:
            raise DimensionError("give the computational basis indices for systems other than two qubits")
        computational = range(4)
    psi0 = choi_input_state(schedule.dim, computational)
    ext_schedule, ext_terms = _doubled(schedule, terms)
    return perturbative_breakdown(ext_schedule, psi0, ext_terms, quad, second_order)


def entanglement_fidelity(
    schedule: GateSchedule,
    terms: Sequence[LindbladTerm],
    quad: QuadratureConfig = DEFAULT_QUADRATURE,
    computational: Sequence[int] | None = None,
    second_order: bool = True,
) -> float:
    """1 - eps_ent from the perturbative terms evaluated on the Choi state."""
    return 1.0 - entanglement_breakdown(schedule, terms, quad, computational, second_order).total


def average_gate_fidelity(f_ent: float, D: int = 4) -> float:
    """(D F_ent + 1)/(D + 1)."""
    if int(D) != D or D < 2:
        raise ValueError(f"D must be an integer >= 2, got {D}")
    if not (-1e-12 <= f_ent <= 1.0 + 1e-12):
        raise ValueError(f"entanglement fidelity {f_ent} outside [0, 1]")
    return (D * f_ent + 1.0) / (D + 1.0)
