from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def random_matrix(rng: np.random.Generator, dim: int, scale: float = 1.0) -> np.ndarray:
    return scale * (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))


def random_hermitian(rng: np.random.Generator, dim: int, scale: float = 1.0) -> np.ndarray:
    a = random_matrix(rng, dim, scale)
    return 0.5 * (a + a.conj().T)


def random_density(rng: np.random.Generator, dim: int) -> np.ndarray:
    a = random_matrix(rng, dim)
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def random_ket(rng: np.random.Generator, dim: int) -> np.ndarray:
    psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return psi / np.linalg.norm(psi)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_log():
    """Record one verdict line per acceptance criterion; echoed in the terminal summary."""

    def record(number: int, title: str, checks: list[tuple[str, bool, str]]) -> bool:
        ok = all(passed for _, passed, _ in checks)
        detail = "; ".join(f"{name}: {value} [{'ok' if passed else 'FAIL'}]" for name, passed, value in checks)
        line = f"criterion {number} {'PASS' if ok else 'FAIL'} ({title}) {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
