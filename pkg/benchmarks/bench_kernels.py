"""Compare the numba and numpy kernel backends.

Times the Pade matrix exponential and the Liouvillian assembly at the sizes
the gate models actually use, plus one end-to-end exact solve per backend
(run in a subprocess so the environment flag takes effect at import).

    python benchmarks/bench_kernels.py [--repeat N]
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import time

import numpy as np
import scipy.linalg

from ybgates import _kernels as k

# Hilbert dimensions used by the models: a qubit pair (4), the dipolar pair
# and the restricted cascade (16), the unrestricted cascade (36)
SIZES = (("d=4 qubit pair", 4), ("d=16 dipolar/cascade", 16), ("d=36 full cascade", 36))

END_TO_END = (
    "import time, warnings; warnings.simplefilter('ignore');"
    "from ybgates import BACKEND, dipolar, cavity;"
    "t=time.perf_counter(); dipolar.md_exact_fidelity(dipolar.DipolarParams(r=10e-9)); a=time.perf_counter()-t;"
    "t=time.perf_counter(); dipolar.md_exact_fidelity(dipolar.DipolarParams(r=12e-9)); b=time.perf_counter()-t;"
    "t=time.perf_counter(); cavity.ps_numeric_fidelity(cavity.ScatteringParams()); c=time.perf_counter()-t;"
    "print(BACKEND, a, b, c)"
)


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def random_generator(dim: int, rng: np.random.Generator):
    h = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = 0.5 * (h + h.conj().T)
    ops = np.stack([rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)) for _ in range(4)])
    ops[np.abs(ops) < 1.0] = 0.0  # collapse operators are sparse in practice
    return h, ops


def kernel_table(repeat: int) -> None:
    rng = np.random.default_rng(0)
    print(f"backend active: {k.BACKEND}")
    print(f"{'size':<24}{'kernel':<14}{'numpy ms':>10}{'numba ms':>10}{'scipy ms':>10}{'max diff':>12}")
    for label, dim in SIZES:
        h, ops = random_generator(dim, rng)
        lv = k.liouvillian_numpy(h, ops)
        a = 0.05 * lv
        rows = [("liouvillian", lambda: k.liouvillian_numpy(h, ops), k.liouvillian_numba and (lambda: k.liouvillian_numba(h, ops)), None)]
        rows.append(("expm", lambda: k.expm_numpy(a), k.expm_numba and (lambda: k.expm_numba(a)), lambda: scipy.linalg.expm(a)))
        for name, np_fn, nb_fn, sp_fn in rows:
            t_np = best_of(np_fn, repeat) * 1e3
            t_nb = best_of(nb_fn, repeat) * 1e3 if nb_fn else float("nan")
            t_sp = best_of(sp_fn, repeat) * 1e3 if sp_fn else float("nan")
            diff = float(np.abs(np_fn() - nb_fn()).max()) if nb_fn else float("nan")
            print(f"{label:<24}{name:<14}{t_np:>10.2f}{t_nb:>10.2f}{t_sp:>10.2f}{diff:>12.1e}")


def end_to_end() -> None:
    print("\nend to end (first call includes compilation or cache load):")
    print(f"{'backend':<10}{'md first s':>12}{'md second s':>13}{'ps cascade s':>14}")
    for flag in ("0", "1"):
        env = {**os.environ, "YBGATES_DISABLE_NUMBA": flag}
        out = subprocess.run([sys.executable, "-c", END_TO_END], capture_output=True, text=True, env=env, check=True)
        backend, a, b, c = out.stdout.split()
        print(f"{backend:<10}{float(a):>12.3f}{float(b):>13.3f}{float(c):>14.3f}")


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    if k.HAVE_NUMBA:
        # compile outside the timed region
        h, ops = random_generator(4, np.random.default_rng(1))
        k.expm_numba(0.1 * k.liouvillian_numba(h, ops))
    kernel_table(args.repeat)
    end_to_end()


if __name__ == "__main__":
    main()
