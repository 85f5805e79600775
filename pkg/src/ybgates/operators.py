"""Dense operator algebra used by every other module.

Operators are plain ``complex128`` numpy arrays. Hermiticity and
density-matrix properties are checked only when a caller asks for it,
because the perturbative code deliberately works with non-Hermitian
Hamiltonians.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from functools import reduce

import numpy as np

from . import _kernels
from .errors import DimensionError, NonFiniteError, ValidationError

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
POSITIVITY_TOL = 1e-10

PAULI_I = np.eye(2, dtype=np.complex128)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)


def as_operator(m, name: str = "operator") -> np.ndarray:
    """Return ``m`` as a square complex128 array, raising on bad shape."""
    arr = np.asarray(m, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise DimensionError(f"{name} must be a non-empty square matrix, got shape {arr.shape}")
    return arr


def as_ket(psi, name: str = "state") -> np.ndarray:
    arr = np.asarray(psi, dtype=np.complex128)
    if arr.ndim == 2 and 1 in arr.shape:
        arr = arr.reshape(-1)
    if arr.ndim != 1 or arr.size == 0:
        raise DimensionError(f"{name} must be a non-empty vector, got shape {arr.shape}")
    return arr


def _require_same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.shape} vs {b.shape}")


def kron(*ops) -> np.ndarray:
    """Kronecker product of one or more operators (or kets), left to right."""
    if not ops:
        raise DimensionError("kron needs at least one operand")
    arrays = [np.asarray(o, dtype=np.complex128) for o in ops]
    return reduce(np.kron, arrays)


def expm(m) -> np.ndarray:
    """Matrix exponential by scaling and squaring with diagonal Pade approximants."""
    arr = as_operator(m, "expm argument")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError("expm received non-finite entries")
    out = _kernels.expm_kernel(np.ascontiguousarray(arr))
    if not np.all(np.isfinite(out)):
        raise NonFiniteError("expm overflowed; input norm too large for double precision")
    return out


def dagger(m) -> np.ndarray:
    return np.asarray(m, dtype=np.complex128).conj().T


def commutator(a, b) -> np.ndarray:
    a, b = as_operator(a), as_operator(b)
    _require_same_dim(a, b)
    return a @ b - b @ a


def anticommutator(a, b) -> np.ndarray:
    a, b = as_operator(a), as_operator(b)
    _require_same_dim(a, b)
    return a @ b + b @ a


def partial_trace(m, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out every subsystem not listed in ``keep``.

    ``dims`` lists subsystem dimensions in tensor order. The kept subsystems
    appear in the result in their original order.
    """
    arr = as_operator(m)
    dims = [int(d) for d in dims]
    if any(d <= 0 for d in dims) or int(np.prod(dims)) != arr.shape[0]:
        raise DimensionError(f"subsystem dims {dims} do not multiply to {arr.shape[0]}")
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise DimensionError(f"keep indices {keep} out of range for {len(dims)} subsystems")
    n = len(dims)
    tensor = arr.reshape(dims + dims)
    traced = [k for k in range(n) if k not in keep]
    # contract row and column index of each traced subsystem, highest first
    for count, k in enumerate(sorted(traced, reverse=True)):
        remaining = n - count
        tensor = np.trace(tensor, axis1=k, axis2=k + remaining)
    kept_dim = int(np.prod([dims[k] for k in keep])) if keep else 1
    return tensor.reshape(kept_dim, kept_dim)


def normalize(psi) -> np.ndarray:
    arr = as_ket(psi)
    norm = np.linalg.norm(arr)
    if norm == 0.0 or not np.isfinite(norm):
        raise ValidationError("cannot normalise a zero or non-finite vector")
    return arr / norm


def basis(dim: int, index: int) -> np.ndarray:
    if not 0 <= index < dim:
        raise DimensionError(f"basis index {index} outside dimension {dim}")
    out = np.zeros(dim, dtype=np.complex128)
    out[index] = 1.0
    return out


def transition(dim: int, row: int, col: int) -> np.ndarray:
    """Matrix unit |row><col| of size ``dim``."""
    out = np.zeros((dim, dim), dtype=np.complex128)
    out[row, col] = 1.0
    return out


def projector(psi) -> np.ndarray:
    arr = as_ket(psi)
    return np.outer(arr, arr.conj())


def embed(op, dims: Sequence[int], site: int) -> np.ndarray:
    """Place a single-subsystem operator at ``site`` with identities elsewhere."""
    op = as_operator(op)
    if op.shape[0] != dims[site]:
        raise DimensionError(f"operator of size {op.shape[0]} does not fit site of size {dims[site]}")
    factors = [op if k == site else np.eye(d, dtype=np.complex128) for k, d in enumerate(dims)]
    return kron(*factors)


def hermitian_part(m) -> np.ndarray:
    arr = as_operator(m)
    return 0.5 * (arr + arr.conj().T)


def is_hermitian(m, tol: float = HERMITIAN_TOL) -> bool:
    arr = as_operator(m)
    scale = max(np.linalg.norm(arr), 1.0)
    return bool(np.max(np.abs(arr - arr.conj().T)) <= tol * scale)


def check_hermitian(m, tol: float = HERMITIAN_TOL, name: str = "operator") -> np.ndarray:
    arr = as_operator(m, name)
    if not is_hermitian(arr, tol):
        raise ValidationError(f"{name} is not Hermitian within {tol:g}")
    return arr


def check_density_matrix(
    rho, trace_tol: float = TRACE_TOL, positivity_tol: float = POSITIVITY_TOL
) -> np.ndarray:
    """Validate trace, Hermiticity and positivity of a density matrix."""
    arr = as_operator(rho, "density matrix")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError("density matrix has non-finite entries")
    if abs(np.trace(arr) - 1.0) > trace_tol:
        raise ValidationError(f"trace {np.trace(arr).real:.3e} differs from 1")
    if not is_hermitian(arr, max(HERMITIAN_TOL, positivity_tol)):
        raise ValidationError("density matrix is not Hermitian")
    lowest = float(np.linalg.eigvalsh(hermitian_part(arr)).min())
    if lowest < -positivity_tol:
        raise ValidationError(f"density matrix has eigenvalue {lowest:.3e}")
    return arr


def state_fidelity(psi, rho, check: bool = True) -> float:
    """Overlap <psi|rho|psi> of a pure target with a density matrix."""
    psi = as_ket(psi)
    rho = as_operator(rho, "density matrix")
    if rho.shape[0] != psi.size:
        raise DimensionError(f"state of size {psi.size} vs density matrix of size {rho.shape[0]}")
    if check:
        check_density_matrix(rho)
    value = float(np.real(np.vdot(psi, rho @ psi)))
    if value < -TRACE_TOL or value > 1.0 + TRACE_TOL:
        raise ValidationError(f"fidelity {value} outside [0, 1]")
    return min(max(value, 0.0), 1.0)


def ket_fidelity(target, psi) -> float:
    """|<target|psi>|^2 for two kets."""
    return float(abs(np.vdot(as_ket(target), as_ket(psi))) ** 2)


def unitary_error(u) -> float:
    """max |U^dag U - I|, the departure from unitarity."""
    u = as_operator(u)
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


def phase_insensitive_overlap(u, v) -> float:
    """|tr(U^dag V)| / d, which equals 1 iff V = e^{i phi} U for unitaries."""
    u, v = as_operator(u), as_operator(v)
    _require_same_dim(u, v)
    return float(abs(np.trace(u.conj().T @ v)) / u.shape[0])
