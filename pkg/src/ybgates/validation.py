"""Programmatic validation suites run by ``ybgates validate``.

Each suite returns a list of :class:`Check` records; the CLI prints them as
JSON and exits non-zero if any failed. Checks evaluate the library against
independent routes (closed forms, exact master-equation solves, identities),
never against values stored from a previous run of the same code path.
"""

from __future__ import annotations

import math
import warnings
from collections.abc import Callable
from dataclasses import asdict, dataclass

import numpy as np

from . import cavity, dipolar
from . import constants as const
from .errors import PhysicsWarning
from .lindblad import GateSchedule, LindbladTerm, Segment
from .oracles import exact_state_fidelity
from .perturbation import eps_H_first_order_nonhermitian, eps_HH_second_order, eps_L_first_order

SUITES = ("perturbation", "md", "vx", "ps", "pi")


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    passed: bool
    value: float
    target: str

    def as_dict(self) -> dict:
        return asdict(self)


def random_hermitian(rng: np.random.Generator, dim: int, scale: float = 1.0) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * 0.5 * (a + a.conj().T)


def random_model(seed: int, dim: int = 2, segments: int = 2):
    """A random piecewise-constant schedule, collapse set and initial ket."""
    rng = np.random.default_rng(seed)
    segs = tuple(
        Segment(float(rng.uniform(0.3, 1.0)), random_hermitian(rng, dim), random_hermitian(rng, dim), 1.0)
        for _ in range(segments)
    )
    terms = [
        LindbladTerm(float(rng.uniform(0.2, 1.0)), rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
        for _ in range(2)
    ]
    psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return GateSchedule(segs), terms, psi / np.linalg.norm(psi)


def loglog_slope(x, y) -> float:
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def _perturbation_suite() -> list[Check]:
    out = []
    sched, terms, psi = random_model(7)
    base = eps_L_first_order(sched, psi, terms)
    scaled = eps_L_first_order(sched, psi, [LindbladTerm(3.0 * t.rate, t.collapse) for t in terms])
    out.append(Check("perturbation", "eps_L1 linear in rates", abs(scaled - 3 * base) <= 1e-12 * max(1.0, abs(scaled)), scaled / base, "3"))
    out.append(Check("perturbation", "eps_H1 vanishes for Hermitian error", abs(eps_H_first_order_nonhermitian(sched, psi)) <= 1e-12, eps_H_first_order_nonhermitian(sched, psi), "0"))
    hh1 = eps_HH_second_order(sched, psi)
    hh2 = eps_HH_second_order(sched.scaled_error(2.0), psi)
    out.append(Check("perturbation", "eps_HH2 scales as delta^2", abs(hh2 - 4 * hh1) <= 1e-10 * max(1.0, abs(hh2)), hh2 / hh1, "4"))
    ideal = sched.scaled_error(0.0)
    # two decades of rate scale ending where the first-order error is 1e-2
    lams = np.logspace(-2, 0, 5) * (1e-2 / eps_L_first_order(ideal, psi, terms))
    resid = []
    for lam in lams:
        t_lam = [LindbladTerm(lam * t.rate, t.collapse) for t in terms]
        exact = 1.0 - exact_state_fidelity(ideal, psi, t_lam)
        resid.append(abs(exact - eps_L_first_order(ideal, psi, t_lam)))
    slope = loglog_slope(lams, resid)
    out.append(Check("perturbation", "first-order residual is second order", slope >= 1.9, slope, ">= 1.9"))
    return out


def _md_suite() -> list[Check]:
    out = []
    for r, f_target, t_target in ((5e-9, 0.95, 1.0e-6), (10e-9, 0.90, 3.68e-6)):
        rep = dipolar.md_closed_form_fidelity(dipolar.DipolarParams(r=r))
        out.append(Check("md", f"closed form at {r * 1e9:g} nm", abs(rep.fidelity - f_target) <= 0.01, rep.fidelity, f"{f_target} +- 0.01"))
        out.append(Check("md", f"gate time at {r * 1e9:g} nm", abs(rep.gate_time / t_target - 1) <= 0.05, rep.gate_time, f"{t_target} +- 5%"))
    worst = 0.0
    for r_nm in (5.0, 10.0, 15.0, 20.0):
        p = dipolar.DipolarParams(r=r_nm * 1e-9, omega=const.hz(10e6))
        gap = abs(dipolar.md_closed_form_fidelity(p).fidelity - dipolar.md_exact_fidelity(p).fidelity)
        worst = max(worst, gap)
    out.append(Check("md", "closed form vs exact, 5-20 nm", worst <= 0.01, worst, "<= 0.01"))
    return out


WEAK_COUPLING_EXCHANGE = dict(g=1.0, kappa=10.0, gamma1=1e-4, gamma_star=1e-4, gamma5=1e-5, delta_eg=100.0)


def _vx_suite() -> list[Check]:
    out = []
    worst = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PhysicsWarning)
        for d in (20.0, 40.0, 80.0, 120.0, 200.0, 300.0, 500.0, 800.0):
            p = cavity.VirtualExchangeParams(Delta=d, **WEAK_COUPLING_EXCHANGE)
            exact = cavity.vx_exact_fidelity(p).fidelity
            if exact > 0.8:
                worst = max(worst, abs(exact - cavity.vx_perturbative_fidelity(p).fidelity))
    out.append(Check("vx", "perturbative vs exact where F > 0.8", worst <= 0.01, worst, "<= 0.01"))
    p = cavity.VirtualExchangeParams(Delta=1.0, **WEAK_COUPLING_EXCHANGE)
    p = p.with_(Delta=cavity.vx_optimal_detuning(p))
    eps_h = cavity.vx_closed_form_breakdown(p).eps_H1
    out.append(Check("vx", "eps_H1 = pi/sqrt(C) at optimal detuning", abs(eps_h - math.pi / math.sqrt(p.C)) <= 1e-12, eps_h, f"{math.pi / math.sqrt(p.C):.6g}"))
    return out


def _ps_suite() -> list[Check]:
    out = []
    star = cavity.ScatteringParams()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PhysicsWarning)
        f = cavity.ps_numeric_fidelity(star).fidelity
    out.append(Check("ps", "star-parameter cascade fidelity", abs(f - 0.8) <= 0.03, f, "0.8 +- 0.03"))
    s1 = cavity.ps_optimize_bandwidth(star.with_cooperativity(100.0)).sigma_p
    s8 = cavity.ps_optimize_bandwidth(star.with_cooperativity(800.0)).sigma_p
    out.append(Check("ps", "optimal bandwidth follows C^(2/3)", abs(s8 / s1 / 4 - 1) <= 0.01, s8 / s1, "4 +- 1%"))
    return out


def _pi_suite() -> list[Check]:
    out = []
    bulk = cavity.pi_fidelity(cavity.InterferenceParams()).fidelity
    out.append(Check("pi", "bulk fidelity", abs(bulk - 0.51) <= 0.005, bulk, "0.51 +- 0.005"))
    gamma1 = const.hz(const.YB_GAMMA1_HZ)
    cav = cavity.InterferenceParams(g=const.hz(const.YB_CAVITY_G_HZ), kappa=const.hz(const.YB_CAVITY_KAPPA_HZ), gamma_star=0.0)
    c = 4 * cav.g**2 / (cav.kappa * gamma1)
    fp = cavity.purcell_factor(cav)
    out.append(Check("pi", "bad-cavity Purcell factor equals C", abs(fp / c - 1) <= 0.01, fp, f"{c:.4g} +- 1%"))
    zero = cavity.pi_fidelity(cavity.InterferenceParams(g=0.0, kappa=1e9)).fidelity
    out.append(Check("pi", "g -> 0 recovers bulk", abs(zero - bulk) <= 1e-15, zero - bulk, "0"))
    _, is_cz = cavity.pi_mub_cz_check([0.0, 0.0, 0.0, math.pi])
    out.append(Check("pi", "MUB phases (0,0,0,pi) give CZ", is_cz, float(is_cz), "true"))
    return out


_SUITE_FUNCS: dict[str, Callable[[], list[Check]]] = {
    "perturbation": _perturbation_suite,
    "md": _md_suite,
    "vx": _vx_suite,
    "ps": _ps_suite,
    "pi": _pi_suite,
}


def run_validation(suite: str) -> list[Check]:
    """Run one suite, or every suite for ``all``."""
    if suite == "all":
        return [c for name in SUITES for c in _SUITE_FUNCS[name]()]
    if suite not in _SUITE_FUNCS:
        raise KeyError(suite)
    return _SUITE_FUNCS[suite]()
