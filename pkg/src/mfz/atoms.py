"""Atom masses eta and the moment sums built from them.

Level k of the discretized measure puts mass w_k(j) = eta(sigma) on the atom
j d^-k, where j = sum_i sigma_i d^(k-i) is the atom index of any word sigma of
length k.  Every index 0..J_k carries positive mass, so a level is stored as a
dense vector of natural-log masses and every reduction is a log-sum-exp.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import BudgetExceeded, NotABarrier
from .system import DEFAULT_MAX_ATOMS, DigitSystem, barrier_digits


@dataclass(frozen=True, eq=False)
class AtomLevel:
    k: int
    log_mass: np.ndarray

    @property
    def n_atoms(self) -> int:
        return self.log_mass.size

    def mass(self) -> np.ndarray:
        return np.exp(self.log_mass)


def atom_index(word: Sequence[int], d: int) -> int:
    j = 0
    for c in word:
        j = j * d + int(c)
    return j


def _check_budget(sys_: DigitSystem, k: int, max_atoms: int) -> None:
    if k < 1:
        raise ValueError(f"level must be >= 1, got {k}")
    n = sys_.n_atoms(k)
    if n > max_atoms:
        raise BudgetExceeded(f"level {k} has {n} atoms > budget {max_atoms}")


@lru_cache(maxsize=16)
def _level(sys_: DigitSystem, k: int) -> np.ndarray:
    logp = np.asarray(sys_.log_p)
    if k == 1:
        out = logp.copy()
    else:
        prev = _level(sys_, k - 1)
        d, m = sys_.d, sys_.m
        J = prev.size - 1
        out = np.full(d * J + m + 1, -np.inf)
        # append a last digit a: atom j -> j d + a
        for a in range(m + 1):
            seg = out[a : a + d * J + 1 : d]
            np.logaddexp(seg, prev + logp[a], out=seg)
    out.flags.writeable = False
    return out


def atom_masses(sys_: DigitSystem, k: int, max_atoms: int = DEFAULT_MAX_ATOMS) -> AtomLevel:
    _check_budget(sys_, k, max_atoms)
    return AtomLevel(k, _level(sys_, k))


def eta_word(sys_: DigitSystem, word: Sequence[int], max_atoms: int = DEFAULT_MAX_ATOMS) -> float:
    """log eta(word); a class function of the word's projection."""
    if len(word) == 0:
        raise ValueError("eta is defined for non-empty words")
    if any(not 0 <= c <= sys_.m for c in word):
        raise ValueError(f"word {tuple(word)} has digits outside 0..{sys_.m}")
    lvl = atom_masses(sys_, len(word), max_atoms)
    return float(lvl.log_mass[atom_index(word, sys_.d)])


def sbar(sys_: DigitSystem, k: int, q: float, max_atoms: int = DEFAULT_MAX_ATOMS) -> float:
    """log of sum_j w_k(j)^q over all level-k atoms."""
    lm = atom_masses(sys_, k, max_atoms).log_mass
    if q == 0:
        return math.log(lm.size)
    return float(logsumexp(q * lm))


def _require_barrier(sys_: DigitSystem, b: int) -> None:
    if b not in barrier_digits(sys_):
        raise NotABarrier(f"{b} is not a barrier digit of this system "
                          f"(barriers: {barrier_digits(sys_)})")


@lru_cache(maxsize=16)
def _block(sys_: DigitSystem, b: int, k: int) -> np.ndarray:
    if k == 1:
        out = np.array([sys_.log_p[b]])
    else:
        prev = _level(sys_, k - 1)
        J = prev.size - 1
        step = sys_.d ** (k - 1)
        out = np.full(J + 1, -np.inf)
        logp = sys_.log_p
        # prepend a first digit c: w_k(b step + j) = sum_c p_c w_{k-1}((b - c) step + j)
        for c in range(sys_.m + 1):
            off = (b - c) * step
            lo, hi = max(0, -off), min(J, J - off)
            if lo > hi:
                continue
            seg = out[lo : hi + 1]
            np.logaddexp(seg, prev[lo + off : hi + off + 1] + logp[c], out=seg)
    out.flags.writeable = False
    return out


def barrier_block(sys_: DigitSystem, b: int, k: int, max_atoms: int = DEFAULT_MAX_ATOMS) -> np.ndarray:
    """log eta(b, sigma) for one sigma per level-(k-1) atom, in atom order.

    Only level k-1 is materialized; the block of level k is assembled by
    prepending the first digit.
    """
    _require_barrier(sys_, b)
    if k > 1:
        _check_budget(sys_, k - 1, max_atoms)
    return _block(sys_, b, k)


def shat(sys_: DigitSystem, b: int, k: int, q: float, max_atoms: int = DEFAULT_MAX_ATOMS) -> float:
    """log of sum over sigma in Xi_{k-1} of eta(b, sigma)^q."""
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    blk = barrier_block(sys_, b, k, max_atoms)
    if q == 0:
        return math.log(blk.size)
    return float(logsumexp(q * blk))


def entropy_sum(sys_: DigitSystem, k: int, max_atoms: int = DEFAULT_MAX_ATOMS) -> float:
    """Level-k entropy in dimension units; an upper bound for the a.s. dimension."""
    lm = atom_masses(sys_, k, max_atoms).log_mass
    return float(-np.dot(np.exp(lm), lm) / (k * math.log(sys_.d)))


def neighbor_ratio_audit(sys_: DigitSystem, k: int, max_atoms: int = DEFAULT_MAX_ATOMS) -> float:
    """Largest neighbor mass ratio at level k divided by k*theta (<= 1 expected)."""
    lm = atom_masses(sys_, k, max_atoms).log_mass
    worst = float(np.abs(np.diff(lm)).max())
    return math.exp(worst) / (k * sys_.theta)
