"""Exact GKSL evolution for piecewise-constant gate schedules.

Density matrices are vectorised by column stacking: ``rho[i, j]`` sits at
index ``i + d*j`` (``ravel(order="F")``). Each schedule segment is
time-independent, so evolution is one superoperator exponential per segment.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import DimensionError, ValidationError
from .operators import as_operator, check_density_matrix, check_hermitian, expm

TIME_RTOL = 1e-12


@dataclass(frozen=True)
class LindbladTerm:
    """One dissipation channel: a rate in rad/s and its collapse operator."""

    rate: float
    collapse: np.ndarray
    label: str = ""

    def __post_init__(self) -> None:
        rate = float(self.rate)
        if not np.isfinite(rate) or rate < 0:
            raise ValidationError(f"Lindblad rate must be finite and >= 0, got {self.rate}")
        op = as_operator(self.collapse, "collapse operator").copy()
        op.setflags(write=False)
        object.__setattr__(self, "rate", rate)
        object.__setattr__(self, "collapse", op)

    @property
    def dim(self) -> int:
        return self.collapse.shape[0]

    @property
    def scaled(self) -> np.ndarray:
        """sqrt(rate) * L, the operator entering the dissipator."""
        return np.sqrt(self.rate) * self.collapse

    def with_rate(self, rate: float) -> LindbladTerm:
        return LindbladTerm(rate, self.collapse, self.label)


@dataclass(frozen=True)
class Segment:
    """A time-independent stretch of a gate.

    ``hamiltonian`` is the ideal (Hermitian) gate Hamiltonian. The actual
    generator during the segment is ``hamiltonian + delta * error_hamiltonian``;
    the error part may be non-Hermitian.
    """

    duration: float
    hamiltonian: np.ndarray
    error_hamiltonian: np.ndarray | None = None
    delta: float = 1.0
    label: str = ""

    def __post_init__(self) -> None:
        duration = float(self.duration)
        if not np.isfinite(duration) or duration <= 0:
            raise ValidationError(f"segment duration must be positive, got {self.duration}")
        h = check_hermitian(self.hamiltonian, name="ideal Hamiltonian").copy()
        h.setflags(write=False)
        he = self.error_hamiltonian
        if he is None:
            he = np.zeros_like(h)
        he = as_operator(he, "error Hamiltonian").copy()
        if he.shape != h.shape:
            raise DimensionError(f"error Hamiltonian shape {he.shape} vs {h.shape}")
        he.setflags(write=False)
        delta = float(self.delta)
        if not np.isfinite(delta):
            raise ValidationError("delta must be finite")
        object.__setattr__(self, "duration", duration)
        object.__setattr__(self, "hamiltonian", h)
        object.__setattr__(self, "error_hamiltonian", he)
        object.__setattr__(self, "delta", delta)

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    @property
    def weighted_error(self) -> np.ndarray:
        """delta * H_e for this segment."""
        return self.delta * self.error_hamiltonian

    def generator(self, include_error: bool = True) -> np.ndarray:
        if include_error:
            return self.hamiltonian + self.weighted_error
        return self.hamiltonian


@dataclass(frozen=True)
class GateSchedule:
    """Ordered, piecewise-constant gate protocol."""

    segments: tuple[Segment, ...]
    boundaries: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        segs = tuple(self.segments)
        if not segs:
            raise ValidationError("a schedule needs at least one segment")
        dim = segs[0].dim
        for s in segs:
            if s.dim != dim:
                raise DimensionError("all segments must act on the same space")
        edges = np.concatenate([[0.0], np.cumsum([s.duration for s in segs])])
        edges.setflags(write=False)
        object.__setattr__(self, "segments", segs)
        object.__setattr__(self, "boundaries", edges)

    @classmethod
    def single(cls, duration: float, hamiltonian, error_hamiltonian=None, delta: float = 1.0) -> GateSchedule:
        return cls((Segment(duration, hamiltonian, error_hamiltonian, delta),))

    def __len__(self) -> int:
        return len(self.segments)

    def __iter__(self):
        return iter(self.segments)

    @property
    def dim(self) -> int:
        return self.segments[0].dim

    @property
    def gate_time(self) -> float:
        return float(self.boundaries[-1])

    def scaled_error(self, factor: float) -> GateSchedule:
        """Same schedule with every delta multiplied by ``factor``."""
        return GateSchedule(
            tuple(
                Segment(s.duration, s.hamiltonian, s.error_hamiltonian, s.delta * factor, s.label)
                for s in self.segments
            )
        )

    def tensor_identity(self, ancilla_dim: int) -> GateSchedule:
        """Extend every Hamiltonian by an identity on an appended ancilla space."""
        eye = np.eye(ancilla_dim, dtype=np.complex128)
        return GateSchedule(
            tuple(
                Segment(
                    s.duration,
                    np.kron(s.hamiltonian, eye),
                    np.kron(s.error_hamiltonian, eye),
                    s.delta,
                    s.label,
                )
                for s in self.segments
            )
        )

    def check_time(self, t: float) -> float:
        tg = self.gate_time
        if t < -TIME_RTOL * tg or t > tg * (1 + TIME_RTOL):
            raise ValueError(f"time {t} outside [0, {tg}]")
        return min(max(float(t), 0.0), tg)


def _scaled_ops(terms: Sequence[LindbladTerm], dim: int) -> np.ndarray:
    ops = np.zeros((len(terms), dim, dim), dtype=np.complex128)
    for q, term in enumerate(terms):
        if term.dim != dim:
            raise DimensionError(f"collapse operator '{term.label}' has size {term.dim}, system {dim}")
        ops[q] = term.scaled
    return ops


def build_liouvillian(
    generator, terms: Sequence[LindbladTerm] = (), include_error: bool = True
) -> np.ndarray:
    """Superoperator of d/dt vec(rho) = -i(H rho - rho H^dag) + sum_k gamma_k D(L_k) rho.

    ``generator`` is a Segment or a bare (possibly non-Hermitian) matrix.
    """
    if isinstance(generator, Segment):
        h = generator.generator(include_error)
    else:
        h = as_operator(generator, "Hamiltonian")
    h = np.ascontiguousarray(h, dtype=np.complex128)
    for term in terms:
        if not isinstance(term, LindbladTerm):
            raise TypeError("terms must be LindbladTerm instances")
    ops = _scaled_ops(list(terms), h.shape[0])
    return _kernels.liouvillian_kernel(h, ops)


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho, dtype=np.complex128).ravel(order="F")


def unvec(v: np.ndarray, dim: int) -> np.ndarray:
    return np.asarray(v).reshape((dim, dim), order="F")


def check_invariant_subspace(
    operators: Iterable[np.ndarray], keep: Sequence[int], dim: int, tol: float = 1e-12
) -> None:
    """Raise unless every operator maps span(keep) into itself."""
    keep = np.asarray(sorted(set(int(k) for k in keep)))
    outside = np.setdiff1d(np.arange(dim), keep)
    if outside.size == 0:
        return
    for op in operators:
        scale = max(float(np.max(np.abs(op))), 1.0)
        leak = float(np.max(np.abs(op[np.ix_(outside, keep)]))) if keep.size else 0.0
        if leak > tol * scale:
            raise ValidationError(f"subspace is not invariant: leakage {leak:.3e}")


@dataclass(frozen=True)
class LindbladChannel:
    """Total superoperator of a schedule, possibly on an invariant subspace."""

    superoperator: np.ndarray
    dim: int
    keep: np.ndarray

    def apply(self, rho0) -> np.ndarray:
        rho0 = as_operator(rho0, "initial state")
        if rho0.shape[0] != self.dim:
            raise DimensionError(f"state of size {rho0.shape[0]} for channel of size {self.dim}")
        k = self.keep
        if k.size < self.dim:
            mask = np.ones(self.dim, dtype=bool)
            mask[k] = False
            if np.max(np.abs(rho0[mask, :]), initial=0.0) > 1e-12:
                raise ValidationError("initial state has support outside the evolved subspace")
        small = rho0[np.ix_(k, k)]
        out_small = unvec(self.superoperator @ vec(small), k.size)
        if k.size == self.dim:
            return out_small
        out = np.zeros((self.dim, self.dim), dtype=np.complex128)
        out[np.ix_(k, k)] = out_small
        return out


def _restrict(schedule, terms, include_error, subspace):
    dim = schedule.dim
    for t in terms:
        if t.dim != dim:
            raise DimensionError(f"collapse operator '{t.label}' has size {t.dim}, system {dim}")
    if subspace is None:
        keep = np.arange(dim)
    else:
        keep = np.asarray(sorted(set(int(k) for k in subspace)))
        ops = [s.generator(include_error) for s in schedule] + [t.collapse for t in terms]
        check_invariant_subspace(ops, keep, dim)
    ix = np.ix_(keep, keep)
    small_terms = [LindbladTerm(t.rate, t.collapse[ix], t.label) for t in terms]
    generators = [
        build_liouvillian(seg.generator(include_error)[ix], small_terms) for seg in schedule
    ]
    return keep, generators


def channel(
    schedule: GateSchedule,
    terms: Sequence[LindbladTerm] = (),
    include_error: bool = True,
    subspace: Sequence[int] | None = None,
) -> LindbladChannel:
    """Compose per-segment superoperator exponentials into the gate channel.

    With ``subspace`` the model is first restricted to the given basis
    states, after checking that the Hamiltonians and collapse operators
    leave that span invariant.
    """
    keep, generators = _restrict(schedule, terms, include_error, subspace)
    n = keep.size
    total = np.eye(n * n, dtype=np.complex128)
    for seg, gen in zip(schedule, generators):
        total = expm(gen * seg.duration) @ total
    return LindbladChannel(total, schedule.dim, keep)


def evolve(
    rho0,
    schedule: GateSchedule,
    terms: Sequence[LindbladTerm] = (),
    include_error: bool = True,
    subspace: Sequence[int] | None = None,
    substeps: int = 1,
    check: bool = True,
) -> np.ndarray:
    """Density matrix at the end of the schedule.

    ``substeps`` splits each segment into equal exponentials; the result is
    unchanged up to rounding because every segment is time-independent.
    """
    rho0 = as_operator(rho0, "initial state")
    if check:
        check_density_matrix(rho0)
    if rho0.shape[0] != schedule.dim:
        raise DimensionError(f"state of size {rho0.shape[0]} for schedule of size {schedule.dim}")
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    dim = schedule.dim
    keep, generators = _restrict(schedule, terms, include_error, subspace)
    mask = np.ones(dim, dtype=bool)
    mask[keep] = False
    if mask.any() and np.max(np.abs(rho0[mask, :])) > 1e-12:
        raise ValidationError("initial state has support outside the evolved subspace")
    ix = np.ix_(keep, keep)
    v = vec(rho0[ix])
    for seg, gen in zip(schedule, generators):
        step = expm(gen * (seg.duration / substeps))
        for _ in range(substeps):
            v = step @ v
    small = unvec(v, keep.size)
    if keep.size == dim:
        return small
    out = np.zeros((dim, dim), dtype=np.complex128)
    out[ix] = small
    return out


def ideal_propagator(schedule: GateSchedule, t: float, t_prime: float = 0.0) -> np.ndarray:
    """U_g(t, t') built from the ideal segment Hamiltonians, 0 <= t' <= t <= T_g."""
    t = schedule.check_time(t)
    t_prime = schedule.check_time(t_prime)
    if t_prime > t:
        raise ValueError(f"need t' <= t, got t'={t_prime}, t={t}")
    u = np.eye(schedule.dim, dtype=np.complex128)
    edges = schedule.boundaries
    for k, seg in enumerate(schedule):
        lo = max(edges[k], t_prime)
        hi = min(edges[k + 1], t)
        if hi > lo:
            u = expm(-1j * seg.hamiltonian * (hi - lo)) @ u
    return u


def ideal_final_state(schedule: GateSchedule, psi0) -> np.ndarray:
    return ideal_propagator(schedule, schedule.gate_time, 0.0) @ np.asarray(psi0, dtype=np.complex128)
