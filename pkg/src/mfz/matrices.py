"""Transfer matrices M_i, word products, spectral radii and the word-tree bounds.

All norms are the 1-operator norm (max column sum).  Products are carried as
(log_scale, P) pairs with ``P`` of unit norm, so nothing underflows along long
words.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .errors import BadSampleCount, BudgetExceeded, NegativeEntry, NotSquare
from .system import DigitSystem

DEFAULT_MAX_WORDS = 10**9
_TAIL_EXACT_WORDS = 4096
_MC_CHUNK = 100_000
NORM = "op1"


@dataclass(frozen=True)
class Bracket:
    lower: float
    upper: float
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, x: float, tol: float = 0.0) -> bool:
        return self.lower - tol <= x <= self.upper + tol

    def overlaps(self, lo: float, hi: float) -> bool:
        return self.lower <= hi and lo <= self.upper

    def to_dict(self) -> dict:
        return {**self.meta, "lower": self.lower, "upper": self.upper}


@dataclass(frozen=True, eq=False)
class TransferMatrixSet:
    a: int
    mats: np.ndarray  # (m + 1, 2a + 1, 2a + 1), read-only

    @property
    def size(self) -> int:
        return 2 * self.a + 1

    def __len__(self) -> int:
        return self.mats.shape[0]

    def __getitem__(self, i: int) -> np.ndarray:
        return self.mats[i]


def build_matrices(sys_: DigitSystem, a: int | None = None) -> TransferMatrixSet:
    """M_i(k, l) = p_{-l d + k + i} for k, l in -a..a (row k, column l)."""
    a = sys_.a if a is None else int(a)
    if a < 1:
        raise ValueError(f"index bound a must be >= 1, got {a}")
    r = np.arange(-a, a + 1)
    mats = np.zeros((sys_.m + 1, 2 * a + 1, 2 * a + 1))
    p = np.asarray(sys_.p)
    for i in range(sys_.m + 1):
        idx = -r[None, :] * sys_.d + r[:, None] + i
        ok = (idx >= 0) & (idx <= sys_.m)
        mats[i][ok] = p[idx[ok]]
    mats.flags.writeable = False
    return TransferMatrixSet(a, mats)


def _tms(x) -> TransferMatrixSet:
    return x if isinstance(x, TransferMatrixSet) else build_matrices(x)


def word_product(tms: TransferMatrixSet | DigitSystem, word: Sequence[int]) -> tuple[float, np.ndarray]:
    """(log_scale, P) with M(word) = exp(log_scale) P and ||P||_1 = 1.

    The product is reversed: M(s_1..s_k) = M[s_k] ... M[s_1].
    """
    tms = _tms(tms)
    if len(word) == 0:
        raise ValueError("word must be non-empty")
    w = np.asarray(word, dtype=np.int64)
    if w.min() < 0 or w.max() >= len(tms):
        raise ValueError(f"word {tuple(word)} has digits outside 0..{len(tms) - 1}")
    logs, P = kernels.batch_products(tms.mats, w[None, :])
    return float(logs[0]), P[0]


def central_log_entry(tms: TransferMatrixSet | DigitSystem, word: Sequence[int]) -> float:
    """log M(word)(0, 0), which equals log eta(word)."""
    tms = _tms(tms)
    s, P = word_product(tms, word)
    return s + math.log(P[tms.a, tms.a])


def norm1(A: np.ndarray) -> float:
    return float(np.abs(A).sum(axis=0).max())


def _check_square_nonneg(A: np.ndarray) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NotSquare(f"expected a square matrix, got shape {A.shape}")
    if (A < 0).any():
        raise NegativeEntry("spectral_radius needs a nonnegative matrix")
    return A


def log_spectral_radius(A: np.ndarray) -> float:
    return kernels.log_spectral_radius(_check_square_nonneg(A))


def spectral_radius(A: np.ndarray) -> float:
    """rho(A) by 60 scaled squarings; 0.0 for nilpotent matrices."""
    lr = log_spectral_radius(A)
    return 0.0 if lr == -math.inf else math.exp(lr)


def _threads(threads: int | None) -> int:
    if threads is None:
        threads = int(os.environ.get("MFZ_THREADS", "1") or 1)
    return max(1, int(threads))


def _check_words(n_dig: int, k: int, max_words: int) -> None:
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if n_dig**k > max_words:
        raise BudgetExceeded(f"{n_dig}^{k} words exceed the budget of {max_words}")


def _map_first(fn, firsts: Sequence[int], threads: int) -> list:
    """Run fn on each top-level digit; results come back in digit order."""
    tasks = [np.array([f], dtype=np.int64) for f in firsts]
    if threads == 1 or len(tasks) == 1:
        return [fn(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=min(threads, len(tasks))) as ex:
        return list(ex.map(fn, tasks))


def norm_tail(tms: TransferMatrixSet, k: int) -> np.ndarray:
    """tail[r] >= log max ||M(tau)||_1 over words of length r, r = 0..k.

    Exact for short lengths, extended by submultiplicativity of the norm.
    """
    n_dig = len(tms)
    tail = np.zeros(k + 1)
    every = np.arange(n_dig)
    for r in range(1, k + 1):
        if n_dig**r <= _TAIL_EXACT_WORDS:
            tail[r] = kernels.word_extremes(tms.mats, r, every)[1]
        else:
            tail[r] = min(tail[s] + tail[r - s] for s in range(1, r))
    return tail


def jsr_bounds(sys_: DigitSystem, k: int, prune: bool = False, threads: int | None = None,
               max_words: int = DEFAULT_MAX_WORDS) -> Bracket:
    """Bracket(rho~_k, rho^_k) on the generalized spectral radius."""
    tms = build_matrices(sys_)
    _check_words(len(tms), k, max_words)
    tail = norm_tail(tms, k) if prune else None

    def run(first):
        return kernels.word_extremes(tms.mats, k, first, prune=prune, tail=tail)

    parts = _map_first(run, range(len(tms)), _threads(threads))
    lr = max(p[0] for p in parts)
    ln = max(p[1] for p in parts)
    leaves = sum(p[2] for p in parts)
    return Bracket(math.exp(lr / k), math.exp(ln / k),
                   {"k": k, "norm": NORM, "method": "max rho / max norm over all words",
                    "log_lower": lr / k, "log_upper": ln / k,
                    "prune": bool(prune), "leaves": int(leaves)})


def min_eta_interior(sys_: DigitSystem, k: int, max_atoms: int | None = None) -> float:
    """log min eta(sigma) over words of length k with first digit in 1..m-1."""
    from .atoms import atom_masses
    from .system import DEFAULT_MAX_ATOMS

    lm = atom_masses(sys_, k, max_atoms or DEFAULT_MAX_ATOMS).log_mass
    if k == 1:
        return float(lm[1 : sys_.m].min())
    step = sys_.d ** (k - 1)
    J = sys_.n_atoms(k - 1) - 1
    # first digit c in 1..m-1 projects onto atoms c d^(k-1) + (0..J_{k-1})
    return float(lm[step : (sys_.m - 1) * step + J + 1].min())


def restricted_min_bounds(sys_: DigitSystem, k: int, threads: int | None = None,
                          max_words: int = DEFAULT_MAX_WORDS) -> Bracket:
    """Radius-space bracket on the restricted lower radius.

    lower = min eta^(1/k) (rho^*_k), upper = min rho^(1/k) (rho~*_k); the
    ordering follows from eta(sigma) <= rho(M(sigma)).
    """
    if sys_.m < 2:
        raise ValueError("restricted bounds need an interior digit")
    tms = build_matrices(sys_)
    _check_words(len(tms), k, max_words)

    def run(first):
        return kernels.word_min_rho(tms.mats, k, first)

    lr = min(_map_first(run, range(1, sys_.m), _threads(threads)))
    le = min_eta_interior(sys_, k)
    return Bracket(math.exp(le / k), math.exp(lr / k),
                   {"k": k, "norm": NORM, "method": "min eta / min rho over interior-start words",
                    "log_lower": le / k, "log_upper": lr / k})


@dataclass(frozen=True)
class LyapunovResult:
    value: float
    stderr: float
    k: int
    mode: str
    samples: int | None = None
    seed: int | None = None


def lyapunov_sum(sys_: DigitSystem, k: int, mode: str = "exact", samples: int | None = None,
                 seed: int | None = None, threads: int | None = None,
                 max_words: int = DEFAULT_MAX_WORDS) -> LyapunovResult:
    """(1/(k log d)) E[-log ||M(omega|k)||_1] under the product law."""
    tms = build_matrices(sys_)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    scale = 1.0 / (k * math.log(sys_.d))
    if mode == "exact":
        _check_words(len(tms), k, max_words)
        logp = np.asarray(sys_.log_p)

        def run(first):
            return kernels.lyapunov_exact(tms.mats, logp, k, first)

        total = math.fsum(_map_first(run, range(len(tms)), _threads(threads)))
        return LyapunovResult(total * scale, 0.0, k, "exact")
    if mode not in ("montecarlo", "mc"):
        raise ValueError(f"unknown mode {mode!r}")
    if samples is None or samples < 1:
        raise BadSampleCount(f"montecarlo needs samples >= 1, got {samples}")
    if seed is None:
        raise ValueError("montecarlo mode needs a seed")
    rng = np.random.Generator(np.random.PCG64(seed))
    p = np.asarray(sys_.p)
    acc = np.empty(samples)
    for start in range(0, samples, _MC_CHUNK):
        n = min(_MC_CHUNK, samples - start)
        words = rng.choice(len(p), size=(n, k), p=p)
        acc[start : start + n] = kernels.neg_log_norms(tms.mats, words)
    acc *= scale
    se = float(acc.std(ddof=1) / math.sqrt(samples)) if samples > 1 else math.inf
    return LyapunovResult(float(acc.mean()), se, k, "montecarlo", samples, seed)
