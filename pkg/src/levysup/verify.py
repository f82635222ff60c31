"""Formula-versus-oracle acceptance checks, grouped in named suites."""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special

from . import formulas as fm
from .models import (
    BrownianDrift,
    CompoundPoissonDrift,
    SpectrallyNegativeStable,
    StableDrift,
)
from .montecarlo import (
    SimConfig,
    grid_extremes,
    mc_first_passage,
    mc_joint_inf_terminal,
    mc_sup_prob,
    mc_sup_prob_exact_jumps,
)
from .quadrature import QuadSpec, integrate_finite, integrate_semi_infinite
from .stable import StableParams, stable_pdf, stable_tail

MC_PATHS = 200_000
MC_STEPS = 2 ** 13
REFLECTION_1 = 2.0 * special.ndtr(-1.0)


def _acceptance_config(n_steps: int, seed: int) -> SimConfig:
    # Estimates do not depend on the worker count, so it is read from the
    # environment purely as a speed setting.
    raw = os.environ.get("LEVYSUP_WORKERS", "1")
    workers = max(1, int(raw)) if raw.strip().isdigit() else 1
    return SimConfig(MC_PATHS, n_steps, seed, workers)


@dataclass(frozen=True)
class CheckResult:
    criterion: int
    name: str
    passed: bool
    detail: str


def _mc_tol(stderr: float) -> float:
    return max(3.0 * stderr, 0.01)


def _stable(alpha: float, c: float = 0.0, sigma: float = 1.0) -> StableDrift:
    return StableDrift(StableParams(alpha, 1.0, sigma), c)


def _negative(alpha: float = 1.5) -> SpectrallyNegativeStable:
    return SpectrallyNegativeStable(StableParams(alpha, -1.0, 1.0))


def wiener_infinite(seed: int) -> list[CheckResult]:
    worst, slowest = 0.0, 0.0
    for u in (0.5, 1.0, 2.0):
        for c in (0.5, 1.0, 2.0):
            start = time.perf_counter()
            est = fm.sup_infinite(BrownianDrift(1.0, c), u)
            slowest = max(slowest, time.perf_counter() - start)
            worst = max(worst, abs(est.value - math.exp(-2.0 * u * c)))
    return [CheckResult(1, "wiener infinite horizon = exp(-2uc)", worst < 1e-6 and slowest < 1.0,
                        f"max abs error {worst:.3g} (< 1e-6), slowest {slowest:.3f}s (< 1s)")]


def stable_infinite(seed: int) -> list[CheckResult]:
    worst = 0.0
    for alpha in (1.2, 1.5, 1.8):
        for u in (0.5, 1.0, 2.0, 5.0):
            quad = fm.sup_infinite(_stable(alpha, 1.0), u).value
            series = fm.sup_infinite_stable_ml(alpha, 1.0, u).value
            worst = max(worst, abs(quad - series) / series)
    return [CheckResult(2, "stable infinite horizon: quadrature vs Mittag-Leffler", worst < 1e-4,
                        f"max relative gap {worst:.3g} (< 1e-4)")]


def alpha_two(seed: int) -> list[CheckResult]:
    worst = 0.0
    for c in (0.5, 1.0, 2.0):
        for u in (0.5, 1.0, 2.0):
            worst = max(worst, abs(fm.sup_infinite_stable_ml(2.0, c, u).value - math.exp(-c * u)))
    return [CheckResult(3, "alpha=2 Mittag-Leffler collapse = exp(-cu)", worst < 1e-8,
                        f"max abs error {worst:.3g} (< 1e-8)")]


def brownian_finite(seed: int) -> list[CheckResult]:
    est = fm.sup_finite(BrownianDrift(1.0, 0.0), 1.0, 1.0)
    gap = abs(est.value - REFLECTION_1)
    return [CheckResult(4, "finite-horizon Brownian vs reflection principle", gap < 1e-5,
                        f"|{est.value:.9f} - {REFLECTION_1:.9f}| = {gap:.3g} (< 1e-5)")]


def stable_mc(seed: int) -> list[CheckResult]:
    m = _stable(1.5, 0.0)
    formula = fm.sup_finite(m, 1.0, 1.0).value
    mc = mc_sup_prob(m, 1.0, 1.0, _acceptance_config(MC_STEPS, seed))
    gap = abs(formula - mc.value)
    ok = gap <= _mc_tol(mc.stderr) and mc.value <= formula + 3.0 * mc.stderr
    return [CheckResult(5, "finite-horizon stable vs grid MC", ok,
                        f"formula {formula:.6f}, MC {mc.value:.6f} +- {mc.stderr:.2g}, gap {gap:.3g} "
                        f"(<= {_mc_tol(mc.stderr):.3g}, MC biased low)")]


def closing_identity(seed: int) -> list[CheckResult]:
    formula = fm.spectrally_negative_sup(1.5, 1.0, 1.0, 1.0).value
    mc = mc_sup_prob(_negative(), 1.0, 1.0, _acceptance_config(MC_STEPS, seed))
    gap = abs(formula - mc.value)
    at_zero = fm.spectrally_negative_sup(1.5, 1.0, 0.0, 1.0).value
    ok = gap <= _mc_tol(mc.stderr) and abs(at_zero - 1.0) < 1e-9
    return [CheckResult(6, "spectrally negative sup = alpha P(Z(T) > u)", ok,
                        f"formula {formula:.6f}, MC {mc.value:.6f} +- {mc.stderr:.2g}, gap {gap:.3g} "
                        f"(<= {_mc_tol(mc.stderr):.3g}); u=0 gives {at_zero!r}")]


def kendall(seed: int) -> list[CheckResult]:
    bm = fm.kendall_first_passage_cdf(BrownianDrift(1.0, 0.0), 1.0, 1.0).value
    formula = fm.kendall_first_passage_cdf(_negative(), 1.0, 1.0).value
    mc = mc_first_passage(_negative(), 1.0, 1.0, _acceptance_config(MC_STEPS, seed))
    gap = abs(formula - mc.value)
    ok = abs(bm - REFLECTION_1) < 1e-5 and gap <= _mc_tol(mc.stderr)
    return [CheckResult(7, "Kendall first passage: Brownian exact, stable vs MC", ok,
                        f"Brownian gap {abs(bm - REFLECTION_1):.3g} (< 1e-5); stable formula {formula:.6f}, "
                        f"MC {mc.value:.6f} +- {mc.stderr:.2g}, gap {gap:.3g} (<= {_mc_tol(mc.stderr):.3g})")]


def exponential_ruin(lam: float, mu_rate: float, c: float, u: float) -> float:
    """Classical ruin probability with exponential jumps."""
    return lam / (c * mu_rate) * math.exp(-(mu_rate - lam / c) * u)


def takacs_infinite(seed: int) -> list[CheckResult]:
    m = CompoundPoissonDrift(1.0, 1.0, 2.0)
    worst = max(abs(fm.takacs_infinite(m, u).value - exponential_ruin(1.0, 1.0, 2.0, u))
                for u in (0.5, 1.0, 2.0))
    critical = fm.takacs_infinite(CompoundPoissonDrift(2.0, 1.0, 2.0), 1.0)
    ok = worst < 1e-6 and critical.value == 1.0
    return [CheckResult(8, "Takacs infinite horizon vs exponential ruin formula", ok,
                        f"max abs error {worst:.3g} (< 1e-6); critical case {critical.value!r}")]


def takacs_finite(seed: int) -> list[CheckResult]:
    m = CompoundPoissonDrift(1.0, 2.0, 1.0)
    formula = fm.takacs_finite(m, 1.0, 5.0).value
    mc = mc_sup_prob_exact_jumps(m, 1.0, 5.0, _acceptance_config(1, seed))
    gap = abs(formula - mc.value)
    return [CheckResult(9, "Takacs finite horizon vs exact-jump MC", gap <= 3.0 * mc.stderr,
                        f"formula {formula:.6f}, MC {mc.value:.6f} +- {mc.stderr:.2g}, "
                        f"gap {gap:.3g} (<= {3 * mc.stderr:.3g})")]


def bin_masses(m, x: float, edges, T: float) -> np.ndarray:
    """Integral of the joint density over each z bin."""
    out = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        res = integrate_finite(lambda z: fm.joint_inf_terminal_density(m, x, z, T), lo, hi,
                               QuadSpec(1e-10, 1e-8), vectorized=True)
        out.append(res.value)
    return np.array(out)


def joint_law(seed: int) -> list[CheckResult]:
    m = BrownianDrift(1.0, 0.0)
    edges = np.linspace(0.0, 4.0, 21)
    formula = bin_masses(m, 1.0, edges, 1.0)
    mc = mc_joint_inf_terminal(m, 1.0, edges, 1.0, _acceptance_config(MC_STEPS, seed))
    gaps = [abs(f - e.value) / _mc_tol(e.stderr) for f, e in zip(formula, mc)]
    first = CheckResult(10, "joint law: Brownian bins vs MC", max(gaps) <= 1.0,
                        f"worst bin gap / tolerance {max(gaps):.3f} (<= 1) over {len(gaps)} bins")
    s = _stable(1.5, 0.0)
    mass = integrate_semi_infinite(lambda z: fm.joint_inf_terminal_density(s, 1.0, z, 1.0), 0.0,
                                   QuadSpec(1e-9, 1e-8), vectorized=True).value
    total = float(s.tail(1.0, 1.0)) + mass
    direct = fm.sup_finite(s, 1.0, 1.0).value
    second = CheckResult(10, "joint law: tail + joint mass = finite-horizon sup", abs(total - direct) < 3e-5,
                         f"|{total:.9f} - {direct:.9f}| = {abs(total - direct):.3g} (< 3e-5)")
    return [first, second]


def horizon(seed: int) -> list[CheckResult]:
    m = _stable(1.5, 1.0)
    finite = fm.sup_finite(m, 1.0, 2000.0).value
    infinite = fm.sup_infinite(m, 1.0).value
    gap = abs(finite - infinite)
    return [CheckResult(11, "horizon consistency at T=2000", gap < 1e-3,
                        f"|{finite:.6f} - {infinite:.6f}| = {gap:.3g} (< 1e-3)")]


def properties(seed: int) -> list[CheckResult]:
    out = []
    p = StableParams(1.5)
    norm = integrate_semi_infinite(lambda x: stable_pdf(x - 60.0, p), 0.0, QuadSpec(1e-10, 1e-10),
                                   vectorized=True).value
    out.append(CheckResult(12, "normalization of the stable density", abs(norm - 1.0) < 1e-6,
                           f"integral {norm!r}"))

    xs = np.array([-3.0, -0.5, 0.0, 0.7, 4.0])
    neg = StableParams(1.5, -1.0)
    refl = np.max(np.abs(stable_tail(xs, neg) - (1.0 - stable_tail(-xs, p))))
    out.append(CheckResult(12, "reflection beta=-1 vs beta=+1", refl < 1e-10, f"max gap {refl:.3g}"))

    m = _stable(1.5, 0.0)
    scaled = abs(fm.sup_finite(m, 1.0, 8.0).value - fm.sup_finite(m, 8.0 ** (-2.0 / 3.0), 1.0).value)
    out.append(CheckResult(12, "self-similarity of the finite-horizon sup", scaled < 1e-8,
                           f"gap {scaled:.3g}"))

    by_t = [fm.sup_finite(m, 1.0, T).value for T in (0.25, 0.5, 1.0, 2.0, 4.0)]
    by_u = [fm.sup_finite(m, u, 1.0).value for u in (0.25, 0.5, 1.0, 2.0, 4.0)]
    mono = all(np.diff(by_t) > 0) and all(np.diff(by_u) < 0)
    out.append(CheckResult(12, "monotonicity in T and u", mono, f"T: {np.round(by_t, 6)}, u: {np.round(by_u, 6)}"))

    cfg = SimConfig(2000, 256, seed)
    grid_extremes.cache_clear()
    first = mc_sup_prob(m, 1.0, 1.0, cfg)
    grid_extremes.cache_clear()
    again = mc_sup_prob(m, 1.0, 1.0, cfg)
    split = mc_sup_prob(m, 1.0, 1.0, SimConfig(2000, 256, seed, workers=2))
    out.append(CheckResult(12, "determinism and worker invariance", first == again == split,
                           f"{first.value!r}, {again.value!r}, {split.value!r}"))

    from .cli import round_trip_matches
    out.append(CheckResult(12, "CLI record round trip", round_trip_matches(seed), "JSON record re-run"))

    cp = CompoundPoissonDrift(1.0, 2.0, 1.0)
    dual = abs(fm.takacs_negative(cp, 1.0, 5.0).value - fm.kendall_first_passage_cdf(cp, 1.0, 5.0).value)
    out.append(CheckResult(12, "first passage: series route vs Kendall route", dual < 1e-6,
                           f"gap {dual:.3g} (< 1e-6)"))
    return out


SUITES: dict[str, Callable[[int], list[CheckResult]]] = {
    "wiener_infinite": wiener_infinite,
    "stable_infinite": stable_infinite,
    "alpha_two": alpha_two,
    "brownian_finite": brownian_finite,
    "stable_mc": stable_mc,
    "closing_identity": closing_identity,
    "kendall": kendall,
    "takacs_infinite": takacs_infinite,
    "takacs_finite": takacs_finite,
    "joint_law": joint_law,
    "horizon": horizon,
    "properties": properties,
}


def run_suite(name: str, seed: int = 42) -> list[CheckResult]:
    if name == "all":
        return [r for fn in SUITES.values() for r in fn(seed)]
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from all, {', '.join(SUITES)}")
    return SUITES[name](seed)


def format_line(r: CheckResult) -> str:
    return f"[{'PASS' if r.passed else 'FAIL'}] criterion {r.criterion:>2}: {r.name}: {r.detail}"
