"""Hot numerical kernels with an optional numba backend.

Every kernel exists as plain Python/numpy source. When numba imports cleanly
and ``YBGATES_DISABLE_NUMBA`` is unset, the same source (or a loop-based
variant) is compiled with ``@njit``. The public names ``expm_kernel`` and
``liouvillian_kernel`` point at whichever backend is active.
"""

from __future__ import annotations

import math
import os

import numpy as np

_FLAG = "YBGATES_DISABLE_NUMBA"


def _numba_disabled() -> bool:
    return os.environ.get(_FLAG, "").strip().lower() in {"1", "true", "yes", "on"}


try:
    if _numba_disabled():
        raise ImportError("numba disabled by environment")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(fn):
            return fn

        return wrap


# Pade degrees and switch points (1-norm bounds) for double-precision
# scaling and squaring.
_THETA3 = 1.495585217958292e-2
_THETA5 = 2.539398330063230e-1
_THETA7 = 9.504178996162932e-1
_THETA9 = 2.097847961257068e0
_THETA13 = 5.371920351148152e0

_B3 = np.array([120.0, 60.0, 12.0, 1.0])
_B5 = np.array([30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0])
_B7 = np.array([17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0])
_B9 = np.array(
    [
        17643225600.0,
        8821612800.0,
        2075673600.0,
        302702400.0,
        30270240.0,
        2162160.0,
        110880.0,
        3960.0,
        90.0,
        1.0,
    ]
)
_B13 = np.array(
    [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ]
)


def _one_norm(a):
    n = a.shape[0]
    best = 0.0
    for j in range(n):
        s = 0.0
        for i in range(n):
            s += abs(a[i, j])
        if s > best:
            best = s
    return best


def _identity(n):
    out = np.zeros((n, n), dtype=np.complex128)
    for i in range(n):
        out[i, i] = 1.0
    return out


def _pade_low(a, b, ident):
    """Diagonal Pade approximant of degree len(b)-1 (odd, at most 9)."""
    m = b.shape[0] - 1
    a2 = a @ a
    power = ident.copy()
    u_acc = b[1] * ident
    v_acc = b[0] * ident
    k = 2
    while k <= m:
        power = power @ a2
        v_acc = v_acc + b[k] * power
        if k + 1 <= m:
            u_acc = u_acc + b[k + 1] * power
        k += 2
    u = a @ u_acc
    return u, v_acc


def _pade13(a, ident):
    b = _B13
    a2 = a @ a
    a4 = a2 @ a2
    a6 = a4 @ a2
    inner_u = a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2)
    u = a @ (inner_u + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident)
    inner_v = a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2)
    v = inner_v + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident
    return u, v


def _expm_source(a):
    n = a.shape[0]
    ident = _identity(n)
    if n == 0:
        return ident
    norm = _one_norm(a)
    squarings = 0
    if norm <= _THETA3:
        u, v = _pade_low(a, _B3, ident)
    elif norm <= _THETA5:
        u, v = _pade_low(a, _B5, ident)
    elif norm <= _THETA7:
        u, v = _pade_low(a, _B7, ident)
    elif norm <= _THETA9:
        u, v = _pade_low(a, _B9, ident)
    else:
        squarings = max(0, int(math.ceil(math.log2(norm / _THETA13))))
        scaled = a / (2.0**squarings)
        u, v = _pade13(scaled, ident)
    r = np.ascontiguousarray(np.linalg.solve(v - u, v + u))
    for _ in range(squarings):
        r = r @ r
    return r


def _liouvillian_kron(h, ops):
    """Column-stacking generator built from Kronecker products.

    vec index of rho[i, j] is i + d*j. With that convention
    vec(A rho B) = (B^T kron A) vec(rho), which gives
    -i(I kron H - conj(H) kron I) + sum_k [conj(L) kron L
    - 1/2 I kron L^dag L - 1/2 (L^dag L)^T kron I].
    """
    d = h.shape[0]
    ident = np.eye(d, dtype=np.complex128)
    out = -1j * (np.kron(ident, h) - np.kron(h.conj(), ident))
    for q in range(ops.shape[0]):
        op = ops[q]
        ldl = op.conj().T @ op
        out = out + np.kron(op.conj(), op)
        out = out - 0.5 * np.kron(ident, ldl) - 0.5 * np.kron(ldl.T, ident)
    return out


def _liouvillian_loops(h, ops):
    """Same generator as ``_liouvillian_kron`` assembled entry by entry."""
    d = h.shape[0]
    nops = ops.shape[0]
    ldl = np.zeros((d, d), dtype=np.complex128)
    for q in range(nops):
        for i in range(d):
            for k in range(d):
                acc = 0.0j
                for m in range(d):
                    acc += np.conj(ops[q, m, i]) * ops[q, m, k]
                ldl[i, k] += acc
    out = np.zeros((d * d, d * d), dtype=np.complex128)
    for j in range(d):
        for i in range(d):
            row = i + d * j
            # left action: (-i H - 1/2 sum L^dag L) rho, couples rho[k, j]
            for k in range(d):
                out[row, k + d * j] += -1j * h[i, k] - 0.5 * ldl[i, k]
            # right action: rho (i H^dag - 1/2 sum L^dag L), couples rho[i, l]
            for l in range(d):
                out[row, i + d * l] += 1j * np.conj(h[j, l]) - 0.5 * ldl[l, j]
            # jump: L rho L^dag
            for q in range(nops):
                for l in range(d):
                    right = np.conj(ops[q, j, l])
                    if right == 0.0:
                        continue
                    for k in range(d):
                        out[row, k + d * l] += ops[q, i, k] * right
    return out


def _expm_numpy(a):
    """Vectorised numpy spelling of ``_expm_source`` (same algorithm)."""
    n = a.shape[0]
    ident = np.eye(n, dtype=np.complex128)
    if n == 0:
        return ident
    norm = float(np.abs(a).sum(axis=0).max())
    squarings = 0
    for theta, b in ((_THETA3, _B3), (_THETA5, _B5), (_THETA7, _B7), (_THETA9, _B9)):
        if norm <= theta:
            a2 = a @ a
            powers = [ident]
            for _ in range((b.shape[0] - 1) // 2):
                powers.append(powers[-1] @ a2)
            u = a @ sum(b[2 * k + 1] * p for k, p in enumerate(powers))
            v = sum(b[2 * k] * p for k, p in enumerate(powers))
            break
    else:
        squarings = max(0, int(math.ceil(math.log2(norm / _THETA13))))
        u, v = _pade13_py(a / 2.0**squarings, ident)
    r = np.linalg.solve(v - u, v + u)
    for _ in range(squarings):
        r = r @ r
    return r


expm_numpy = _expm_numpy
liouvillian_numpy = _liouvillian_kron
_pade13_py = _pade13

if HAVE_NUMBA:
    _one_norm = njit(cache=True)(_one_norm)
    _identity = njit(cache=True)(_identity)
    _pade_low = njit(cache=True)(_pade_low)
    _pade13 = njit(cache=True)(_pade13)
    expm_numba = njit(cache=True)(_expm_source)
    liouvillian_numba = njit(cache=True)(_liouvillian_loops)
    expm_kernel = expm_numba
    liouvillian_kernel = liouvillian_numba
    BACKEND = "numba"
else:  # pragma: no cover
    expm_numba = None
    liouvillian_numba = None
    expm_kernel = expm_numpy
    liouvillian_kernel = liouvillian_numpy
    BACKEND = "numpy"
