"""Exact master-equation references for the perturbative estimates.

These routines evolve density matrices with the full Lindbladian and are
used to validate the perturbative terms: state fidelity, entanglement
fidelity of the Choi state, and a Haar Monte-Carlo average gate fidelity.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence

import numpy as np

from .errors import DimensionError
from .lindblad import GateSchedule, LindbladTerm, channel, evolve, ideal_final_state, ideal_propagator
from .operators import as_ket, projector


def exact_state_fidelity(
    schedule: GateSchedule,
    psi0,
    terms: Sequence[LindbladTerm] = (),
    include_error: bool = True,
    subspace: Sequence[int] | None = None,
) -> float:
    """<psi_ideal(T)| rho(T) |psi_ideal(T)> with rho evolved by the full generator."""
    psi0 = as_ket(psi0)
    rho = evolve(projector(psi0), schedule, terms, include_error=include_error, subspace=subspace)
    target = ideal_final_state(schedule, psi0)
    return float(np.real(np.vdot(target, rho @ target)))


def _computational(dim: int, computational: Sequence[int] | None) -> list[int]:
    if computational is None:
        if dim != 4:
            raise DimensionError("give computational indices for systems other than two qubits")
        return [0, 1, 2, 3]
    comp = [int(c) for c in computational]
    if len(comp) != 4:
        raise DimensionError("exactly four computational states are required")
    return comp


PostMap = Callable[[np.ndarray], np.ndarray]


def exact_entanglement_fidelity(
    schedule: GateSchedule,
    terms: Sequence[LindbladTerm] = (),
    computational: Sequence[int] | None = None,
    subspace: Sequence[int] | None = None,
    post: PostMap | None = None,
) -> float:
    """Choi-state fidelity, assembled from the channel acting on |q_i><q_j|.

    By linearity, (I x E)(|Phi><Phi|) with |Phi> = (1/2) sum_i |i>|q_i> is
    (1/4) sum_ij |i><j| x E(|q_i><q_j|), so its overlap with the ideal Choi
    vector needs only 16 evolutions on the system space. ``post`` is an
    optional linear map applied to each output (for example a relaxation
    that returns leaked population to the qubit levels).
    """
    comp = _computational(schedule.dim, computational)
    ch = channel(schedule, terms, subspace=subspace)
    u = ideal_propagator(schedule, schedule.gate_time)
    dim = schedule.dim
    images = [u[:, q] for q in comp]
    total = 0.0 + 0.0j
    for i, qi in enumerate(comp):
        for j, qj in enumerate(comp):
            unit = np.zeros((dim, dim), dtype=np.complex128)
            unit[qi, qj] = 1.0
            out = ch.apply(unit)
            if post is not None:
                out = post(out)
            total += np.vdot(images[i], out @ images[j])
    return float(total.real / 16.0)


def survival_probability(
    schedule: GateSchedule,
    terms: Sequence[LindbladTerm] = (),
    computational: Sequence[int] | None = None,
    subspace: Sequence[int] | None = None,
    post: PostMap | None = None,
) -> float:
    """Mean population left in the ideal image of the qubit space, over a basis input.

    For a channel that leaks, the Haar average obeys
    F_avg = (D F_ent + s)/(D + 1) with this s; s = 1 without leakage.
    """
    comp = _computational(schedule.dim, computational)
    ch = channel(schedule, terms, subspace=subspace)
    u = ideal_propagator(schedule, schedule.gate_time)
    images = u[:, comp]
    total = 0.0
    for q in comp:
        unit = np.zeros((schedule.dim, schedule.dim), dtype=np.complex128)
        unit[q, q] = 1.0
        out = ch.apply(unit)
        if post is not None:
            out = post(out)
        total += float(np.real(np.trace(images.conj().T @ out @ images)))
    return total / len(comp)


def haar_states(n: int, dim: int, seed: int | None = 0) -> np.ndarray:
    """``n`` Haar-random pure states of dimension ``dim`` as rows."""
    rng = np.random.default_rng(seed)
    raw = rng.normal(size=(n, dim)) + 1j * rng.normal(size=(n, dim))
    return raw / np.linalg.norm(raw, axis=1, keepdims=True)


def haar_average_fidelity(
    schedule: GateSchedule,
    terms: Sequence[LindbladTerm] = (),
    computational: Sequence[int] | None = None,
    samples: int = 2000,
    seed: int | None = 0,
    subspace: Sequence[int] | None = None,
    post: PostMap | None = None,
) -> tuple[float, float]:
    """Monte-Carlo mean state fidelity over Haar inputs, with its standard error."""
    comp = _computational(schedule.dim, computational)
    ch = channel(schedule, terms, subspace=subspace)
    u = ideal_propagator(schedule, schedule.gate_time)
    dim = schedule.dim
    values = np.empty(samples)
    for n, coeffs in enumerate(haar_states(samples, 4, seed)):
        psi = np.zeros(dim, dtype=np.complex128)
        psi[comp] = coeffs
        out = ch.apply(projector(psi))
        if post is not None:
            out = post(out)
        target = u @ psi
        values[n] = np.vdot(target, out @ target).real
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(samples))
