from __future__ import annotations

import numpy as np
import pytest
from conftest import random_hermitian, random_matrix

from ybgates import dipolar
from ybgates.errors import DimensionError
from ybgates.lindblad import GateSchedule, LindbladTerm, Segment
from ybgates.oracles import (
    exact_entanglement_fidelity,
    exact_state_fidelity,
    haar_average_fidelity,
    haar_states,
    survival_probability,
)


def qubit_pair_model(rng, rate=0.05):
    sched = GateSchedule((Segment(1.0, random_hermitian(rng, 4), None, 1.0),))
    terms = [LindbladTerm(rate, random_matrix(rng, 4)) for _ in range(2)]
    return sched, terms


def test_noiseless_channel_is_perfect(rng):
    sched, _ = qubit_pair_model(rng)
    assert exact_entanglement_fidelity(sched) == pytest.approx(1.0, abs=1e-12)
    mean, _ = haar_average_fidelity(sched, samples=50)
    assert mean == pytest.approx(1.0, abs=1e-12)
    assert survival_probability(sched) == pytest.approx(1.0, abs=1e-12)


def test_haar_matches_linear_identity_without_leakage(rng):
    sched, terms = qubit_pair_model(rng)
    f_ent = exact_entanglement_fidelity(sched, terms)
    mean, sem = haar_average_fidelity(sched, terms, samples=2000, seed=3)
    assert abs(mean - (4 * f_ent + 1) / 5) <= 3 * sem


def test_haar_matches_survival_corrected_identity_with_leakage():
    m = dipolar.build_md_schedule(dipolar.DipolarParams(r=10e-9))
    comp = dipolar.COMPUTATIONAL
    f_ent = exact_entanglement_fidelity(m.schedule, m.terms, comp)
    s = survival_probability(m.schedule, m.terms, comp)
    assert s < 1.0
    mean, sem = haar_average_fidelity(m.schedule, m.terms, comp, samples=2000, seed=5)
    assert abs(mean - (4 * f_ent + s) / 5) <= 3 * sem


def test_state_fidelity_bounds(rng):
    sched, terms = qubit_pair_model(rng, rate=0.5)
    psi = np.array([1, 0, 0, 0], dtype=complex)
    f = exact_state_fidelity(sched, psi, terms)
    assert 0.0 <= f < 1.0


def test_haar_states_are_normalised_and_seeded():
    a = haar_states(100, 4, seed=9)
    assert np.allclose(np.linalg.norm(a, axis=1), 1.0)
    assert np.array_equal(a, haar_states(100, 4, seed=9))
    # first moment of |<0|psi>|^2 over Haar states is 1/d
    assert np.mean(np.abs(haar_states(4000, 4, seed=1)[:, 0]) ** 2) == pytest.approx(0.25, abs=0.02)


def test_computational_indices_required_beyond_two_qubits(rng):
    sched = GateSchedule((Segment(1.0, random_hermitian(rng, 6), None, 1.0),))
    with pytest.raises(DimensionError):
        exact_entanglement_fidelity(sched)
    with pytest.raises(DimensionError):
        exact_entanglement_fidelity(sched, computational=[0, 1, 2])
