"""Reproduction checks behind ``mfz verify``.

Each check returns a :class:`CheckResult` with the measured values, the
tolerance it was held to and its wall time.  Suites:

* ``fast``  - everything cheap (well under a minute on one core)
* ``paper`` - the published numbers (alpha* for the 4-fold convolution, the
  bounds table, golden-ratio and threshold cases, certificates)
* ``full``  - every check, including the 10^6-sample Monte Carlo run
"""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import kernels
from .atoms import (
    atom_index,
    atom_masses,
    entropy_sum,
    neighbor_ratio_audit,
    shat,
)
from .dims import (
    GOLDEN,
    abs_continuity_certificate,
    alpha_bar,
    alpha_lower_bracket,
    alpha_star_bracket,
    formalism_holds,
    golden_closed_form,
    periodic_dim,
)
from .errors import MfzError, NotRegular
from .matrices import build_matrices, lyapunov_sum, spectral_radius
from .spectra import (
    beta_k,
    dim_range_inner,
    legendre,
    q_crossing,
    q_grid,
    tau,
    tau_hat,
    tau_hat_curve,
)
from .system import (
    DigitSystem,
    cantor_convolution,
    find_barrier,
    iterate,
    regularity_threshold,
    uniform,
)

ALPHA4_STAR = math.log(16 / 5) / math.log(3)
TABLE = {5: (0.972510, 0.972638), 6: (0.976057, 0.976628)}
# word lengths for the bounds table: the largest that stay near a minute each
TABLE_K = {5: 11, 6: 10}


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: dict
    tolerance: str
    runtime: float = 0.0
    error: str | None = None

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        shown = ", ".join(f"{k}={_fmt(v)}" for k, v in self.measured.items())
        tail = f" error={self.error}" if self.error else ""
        return f"[{status}] {self.name} ({self.runtime:.2f}s) {shown} | tol: {self.tolerance}{tail}"

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "measured": self.measured,
                "tolerance": self.tolerance, "runtime": self.runtime, "error": self.error}


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.10g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


@dataclass
class _Check:
    name: str
    fn: Callable[[dict], bool]
    tolerance: str
    suites: tuple[str, ...] = ("paper", "full")
    budget: float | None = None


def _run(check: _Check) -> CheckResult:
    measured: dict = {}
    t0 = time.perf_counter()
    try:
        ok = bool(check.fn(measured))
        err = None
    except MfzError as exc:
        ok, err = False, f"{type(exc).__name__}: {exc}"
    dt = time.perf_counter() - t0
    if check.budget is not None:
        measured["budget_s"] = check.budget
        ok = ok and dt <= check.budget
    return CheckResult(check.name, ok, measured, check.tolerance, dt, err)


def c3() -> DigitSystem:
    return cantor_convolution(3)


def c4() -> DigitSystem:
    return cantor_convolution(4)


def c3_iterated() -> DigitSystem:
    return iterate(c3(), 2)


def _log_rel(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.abs(np.expm1(np.asarray(a) - np.asarray(b))).max())


# -- checks -----------------------------------------------------------------

def check_alpha4_star(m: dict) -> bool:
    s = c4()
    rho = spectral_radius(build_matrices(s)[1])
    pd = periodic_dim(s, (1,))
    br = alpha_star_bracket(s, 8)
    m.update(rho_M1=rho, periodic_dim=pd, bracket=[br.lower, br.upper], width=br.width)
    return (abs(rho - 5 / 16) <= 1e-9 and abs(pd - ALPHA4_STAR) <= 1e-9
            and br.contains(ALPHA4_STAR) and br.width <= 0.02)


def check_isolation(m: dict) -> bool:
    s = c4()
    br = alpha_star_bracket(s, 8)
    abar = alpha_bar(s)
    m.update(alpha_star_upper=br.upper, alpha_bar=abar)
    return br.upper < abar


def _table(n: int) -> Callable[[dict], bool]:
    def check(m: dict) -> bool:
        k = TABLE_K[n]
        br = alpha_lower_bracket(cantor_convolution(n), k)
        lo, hi = TABLE[n]
        m.update(k=k, bracket=[br.lower, br.upper], table=[lo, hi])
        return br.overlaps(lo, hi)
    return check


def check_golden(m: dict) -> bool:
    ok = True
    for d in (3, 4):
        s = uniform(d, d)
        t = build_matrices(s)
        rho = spectral_radius(t[0] @ t[1])
        target = golden_closed_form(d)
        br = alpha_lower_bracket(s, 6)
        m[f"d{d}_rho_err"] = abs(rho - (GOLDEN / (d + 1)) ** 2)
        m[f"d{d}_bracket"] = [br.lower, br.upper]
        m[f"d{d}_width"] = br.width
        ok &= m[f"d{d}_rho_err"] <= 1e-9 and br.contains(target) and br.width <= 0.03
    return ok


def check_threshold(m: dict) -> bool:
    thr = regularity_threshold(3)
    m["threshold"] = thr
    try:
        cantor_convolution(3, 0.36)
        low_rejected = False
    except NotRegular:
        low_rejected = True
    cantor_convolution(3, 0.37)
    m["rejects_0.36"] = low_rejected
    return abs(thr - 0.366025) <= 1e-6 and low_rejected


def check_abs_continuity(m: dict) -> bool:
    good = abs_continuity_certificate(uniform(3, 5))
    bad = abs_continuity_certificate(c3())
    m.update(uniform_3_5=good, cantor3=bad)
    return good and not bad


def check_oracle(m: dict) -> bool:
    s = c3()
    tms = build_matrices(s)
    worst = 0.0
    n_words = 0
    for n in range(1, 9):
        words = np.array(list(itertools.product(range(s.m + 1), repeat=n)), dtype=np.int64)
        logs, P = kernels.batch_products(tms.mats, words)
        central = logs + np.log(P[:, tms.a, tms.a])
        idx = words @ (s.d ** np.arange(n - 1, -1, -1))
        dp = atom_masses(s, n).log_mass[idx]
        worst = max(worst, _log_rel(central, dp))
        n_words += len(words)
    dp_err = 0.0
    logp = np.asarray(s.log_p)
    for n in range(1, 7):
        words = np.array(list(itertools.product(range(s.m + 1), repeat=n)), dtype=np.int64)
        idx = words @ (s.d ** np.arange(n - 1, -1, -1))
        brute = np.zeros(s.n_atoms(n))
        np.add.at(brute, idx, np.exp(logp[words].sum(axis=1)))
        dp_err = max(dp_err, _log_rel(atom_masses(s, n).log_mass, np.log(brute)))
    m.update(words=n_words, eta_vs_matrix_rel=worst, dp_vs_brute_rel=dp_err)
    return worst <= 1e-10 and dp_err <= 1e-10


def _eta(s: DigitSystem, w) -> float:
    return float(atom_masses(s, len(w)).log_mass[atom_index(w, s.d)])


def check_lemmas(m: dict) -> bool:
    rng = np.random.default_rng(20240607)
    systems = [c3(), c4(), uniform(3, 3), uniform(4, 4)]
    worst_super = -math.inf
    for s in systems:
        for _ in range(1000):
            a = rng.integers(0, s.m + 1, size=rng.integers(1, 6))
            b = rng.integers(0, s.m + 1, size=rng.integers(1, 6))
            worst_super = max(worst_super, _eta(s, a) + _eta(s, b) - _eta(s, np.concatenate([a, b])))
    # barrier factorization, exhaustive over short words
    it = c3_iterated()
    worst_fact = 0.0
    digits = range(it.m + 1)
    for b in (5, 6, 7):
        for n1, n2 in ((1, 0), (1, 1), (2, 1), (1, 2)):
            for u in itertools.product(digits, repeat=n1):
                for v in itertools.product(digits, repeat=n2):
                    w = (b, *v)
                    worst_fact = max(worst_fact, abs(_eta(it, u + w) - _eta(it, u) - _eta(it, w)))
    audit = max(neighbor_ratio_audit(s, k) for s in systems for k in range(1, 11))
    worst_rho = -math.inf
    s = c3()
    tms = build_matrices(s)
    for _ in range(1000):
        w = rng.integers(0, s.m + 1, size=rng.integers(1, 11))
        logs, P = kernels.batch_products(tms.mats, w[None, :])
        lr = logs[0] + kernels.log_spectral_radius(P[0])
        worst_rho = max(worst_rho, _eta(s, w) - lr)
    m.update(supermult_excess=worst_super, barrier_factorization_err=worst_fact,
             neighbor_audit=audit, eta_minus_rho=worst_rho)
    return worst_super <= 1e-10 and worst_fact <= 1e-10 and audit <= 1 + 1e-12 and worst_rho <= 1e-10


def check_spectrum(m: dict) -> bool:
    s = c3()
    it = c3_iterated()
    t1 = tau(s, 1.0, 12)
    t0 = tau(s, 0.0, 12)
    qs = q_grid()
    curves = {k: tau_hat_curve(it, 5, k, qs) for k in (2, 4, 8)}
    dec = max(float((curves[2 * k].values - curves[k].values).max()) for k in (2, 4))
    c8 = curves[8]
    d2 = float(c8.second_differences().max())
    back = legendre(legendre(c8))
    ref = np.interp(back.x, c8.x, c8.values)
    dbl = float(np.abs(back.values - ref).max())
    m.update(tau1=t1.value, tau1_direction=t1.direction, tau0_k12=t0.value,
             tau_hat_increase=dec, tau_hat_d2_max=d2, double_conjugate_err=dbl)
    step = float(qs[1] - qs[0])
    return (t1.value == 0.0 and t1.direction == "exact" and abs(t0.value + 1) <= 0.05
            and dec <= 1e-10 and d2 <= 1e-8 and dbl <= 2 * step)


def _piecewise(s: DigitSystem, m: dict) -> bool:
    level, atoms = find_barrier(s)
    it = iterate(s, level)
    b = atoms[0]
    kk = 12 // level
    q0 = q_crossing(it, b, kk)
    t = tau(s, 2 * q0, 12)
    target = alpha_bar(s) * 2 * q0
    m.update(level=level, b=b, q0=q0, tau_2q0=t.value, alpha_bar_q=target,
             gap=target - t.value)
    # tau_k is a lower bound for q < 0
    return q0 < 0 and t.direction == "lower_approx" and 0 <= target - t.value <= 0.1


def check_piecewise_4fold(m: dict) -> bool:
    return _piecewise(c4(), m)


def check_piecewise_3fold(m: dict) -> bool:
    return _piecewise(c3(), m)


def check_gamma(m: dict, samples: int = 10**6) -> bool:
    s = c3()
    upper = entropy_sum(s, 12)
    ex = lyapunov_sum(s, 8)
    mc = lyapunov_sum(s, 8, mode="montecarlo", samples=samples, seed=12345)
    z = abs(mc.value - ex.value) / mc.stderr
    width = upper - ex.value
    m.update(lower=ex.value, upper=upper, width=width, mc=mc.value, mc_stderr=mc.stderr, mc_z=z)
    return ex.value <= upper and width <= 0.05 and 0.9 < ex.value and upper < 1.01 and z <= 4


def check_formalism(m: dict) -> bool:
    flags = {"uniform3": formalism_holds(uniform(3, 3)), "uniform4": formalism_holds(uniform(4, 4)),
             "cantor3": formalism_holds(c3()), "cantor4": formalism_holds(c4())}
    m.update(flags)
    ok = flags["uniform3"] and flags["uniform4"] and not flags["cantor3"] and not flags["cantor4"]
    q = -1.0
    for d in (3, 4):
        s = uniform(d, d)
        level, atoms = find_barrier(s)
        it = iterate(s, level)
        gaps = []
        for k in (6, 8, 10):
            lo = tau(s, q, k)
            hi = tau_hat(it, atoms[0], q, k // level)
            gaps.append(hi.value - lo.value)
        m[f"d{d}_gap_k10"] = gaps[-1]
        # tau_k <= tau = tau^ <= tau^_k; the sandwich must be consistent and tighten with k
        ok &= gaps[-1] >= 0 and gaps[0] > gaps[1] > gaps[2]
    return ok


def check_beta(m: dict) -> bool:
    it = c3_iterated()
    betas = [beta_k(it, 5, k) for k in (2, 4, 8)]
    resid = max(abs(shat(it, 5, k, b)) for k, b in zip((2, 4, 8), betas))
    ranges = [dim_range_inner(it, 5, k) for k in (2, 4, 8)]
    s = c3()
    env = (alpha_lower_bracket(s, 10).lower, alpha_star_bracket(s, 10).upper)
    union_lo = np.minimum.accumulate([r.lo for r in ranges])
    union_hi = np.maximum.accumulate([r.hi for r in ranges])
    grows = bool(np.all(np.diff(union_lo) <= 0) and np.all(np.diff(union_hi) >= 0))
    inside = all(env[0] <= r.lo <= r.hi <= env[1] for r in ranges)
    m.update(betas=betas, residual=resid, ranges=[[r.lo, r.hi] for r in ranges],
             envelope=list(env))
    return (all(0 < b < 1 for b in betas) and resid <= 1e-10
            and betas[0] < betas[1] < betas[2] and grows and inside)


CHECKS = [
    _Check("alpha4_star", check_alpha4_star,
           "rho(M_1)=5/16 and periodic dim within 1e-9; k=8 bracket contains it, width <= 0.02",
           budget=60.0),
    _Check("top_dimension_isolated", check_isolation, "alpha* upper < alpha_bar at k=8"),
    _Check("bounds_table_5fold", _table(5), "alpha_lower bracket overlaps table row", budget=600.0),
    _Check("bounds_table_6fold", _table(6), "alpha_lower bracket overlaps table row", budget=600.0),
    _Check("golden_ratio", check_golden, "rho within 1e-9; k=6 bracket contains closed form, width <= 0.03"),
    _Check("regularity_threshold", check_threshold, "1e-6; 0.36 rejected, 0.37 accepted"),
    _Check("abs_continuity", check_abs_continuity, "row sums <= 1/d + 1e-15"),
    _Check("eta_oracle", check_oracle, "relative 1e-10", ("fast", "full"), budget=60.0),
    _Check("lemma_properties", check_lemmas, "1e-10 (log domain); audit <= 1", ("fast", "full")),
    _Check("spectrum_behaviour", check_spectrum, "tau(0) within 0.05; concavity 1e-8; 2x grid step",
           ("fast", "full")),
    _Check("piecewise_tau_4fold", check_piecewise_4fold, "q0 < 0; gap <= 0.1 (certified side)"),
    _Check("piecewise_tau_3fold", check_piecewise_3fold, "q0 < 0; gap <= 0.1 (certified side)",
           ("fast", "full")),
    _Check("gamma_bracket", check_gamma, "width <= 0.05 inside (0.9, 1.01); MC within 4 SE",
           ("full",)),
    _Check("formalism_criterion", check_formalism, "flags exact; tau_k <= tau^_k, gap shrinking"),
    _Check("auxiliary_exponent", check_beta, "residual 1e-10; beta increasing; ranges in envelope",
           ("fast", "full")),
]

SUITES = ("fast", "paper", "full")


def checks_for(suite: str) -> list[_Check]:
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    fast_ok = {"regularity_threshold", "abs_continuity", "top_dimension_isolated", "golden_ratio",
               "formalism_criterion", "alpha4_star"}
    out = []
    for c in CHECKS:
        if suite == "full" or suite in c.suites or (suite == "fast" and c.name in fast_ok):
            out.append(c)
    return out


def run_suite(suite: str = "fast", echo: Callable[[str], None] | None = None) -> list[CheckResult]:
    results = []
    for c in checks_for(suite):
        r = _run(c)
        if echo is not None:
            echo(r.line())
        results.append(r)
    return results


def run_check(name: str) -> CheckResult:
    for c in CHECKS:
        if c.name == name:
            return _run(c)
    raise KeyError(name)
