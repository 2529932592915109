"""Pure numpy implementation of the hot kernels.

Same signatures and results as the compiled ``_kernels`` module.  Products of
transfer matrices are always carried as (log_scale, P) with ``P`` normalized
to unit 1-operator norm (max column sum), so word lengths never underflow.

Word enumeration order is lexicographic with the *first* digit outermost; the
product of a word is ``M(sigma) = M[sigma_k] @ ... @ M[sigma_1]``.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

SQUARINGS = 60
_FIXED_POINT_TOL = 1e-15
_SUFFIX_BATCH = 20000


def _norm1(P):
    return np.abs(P).sum(axis=-2).max(axis=-1)


def _norminf(P):
    return np.abs(P).sum(axis=-1).max(axis=-1)


def log_spectral_radius(A: np.ndarray) -> float:
    """log rho(A) by scaled repeated squaring; -inf for nilpotent matrices."""
    return float(batch_log_spectral_radius(np.asarray(A, dtype=float)[None])[0])


def batch_log_spectral_radius(A: np.ndarray) -> np.ndarray:
    B = np.array(A, dtype=float, copy=True)
    out = np.zeros(B.shape[0])
    live = np.ones(B.shape[0], dtype=bool)
    scale = 1.0
    for _ in range(SQUARINGS):
        idx = np.flatnonzero(live)
        if idx.size == 0:
            return out
        Bl = B[idx]
        c = _norm1(Bl)
        dead = c <= 0
        out[idx[dead]] = -np.inf
        live[idx[dead]] = False
        keep = ~dead
        idx, Bl, c = idx[keep], Bl[keep], c[keep]
        out[idx] += scale * np.log(c)
        Bl = Bl / c[:, None, None]
        B2 = Bl @ Bl
        lam = _norm1(B2)
        zero = lam <= 0
        out[idx[zero]] = -np.inf
        live[idx[zero]] = False
        nz = ~zero
        idx, Bl, B2, lam = idx[nz], Bl[nz], B2[nz], lam[nz]
        fixed = np.abs(B2 / lam[:, None, None] - Bl).max(axis=(1, 2)) <= _FIXED_POINT_TOL
        # fixed point of the normalized squaring: every later norm equals lam
        out[idx[fixed]] += scale * np.log(lam[fixed])
        live[idx[fixed]] = False
        B[idx[~fixed]] = B2[~fixed]
        scale *= 0.5
    idx = np.flatnonzero(live)
    if idx.size:
        c = _norm1(B[idx])
        with np.errstate(divide="ignore"):
            out[idx] = np.where(c > 0, out[idx] + scale * np.log(c), -np.inf)
    return out


def batch_products(mats: np.ndarray, words: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Normalized products for a 2-D array of equal-length words."""
    mats = np.asarray(mats, dtype=float)
    words = np.asarray(words, dtype=np.int64)
    N, k = words.shape
    n = mats.shape[1]
    logs = np.zeros(N)
    P = np.broadcast_to(np.eye(n), (N, n, n)).copy()
    for i in range(k):
        P = mats[words[:, i]] @ P
        c = _norm1(P)
        pos = c > 0
        P[pos] /= c[pos, None, None]
        with np.errstate(divide="ignore"):
            logs += np.log(c)
    return logs, P


def _suffix_table(mats, L):
    """Normalized products of all words of length L, lexicographic order."""
    n_dig = mats.shape[0]
    words = np.array(list(itertools.product(range(n_dig), repeat=L)), dtype=np.int64)
    return words, *batch_products(mats, words)


def _split(n_dig: int, k: int) -> int:
    L = 1
    while L < k - 1 and n_dig ** (L + 1) <= _SUFFIX_BATCH:
        L += 1
    return min(L, k - 1)


def _leaves(mats, k, first_digits, logp=None, tail=None, best=None):
    """Yield (log_scale, P, log_weight) batches covering every word of length k.

    With ``tail``/``best`` given, a prefix whose norm bound cannot beat the
    current best spectral radius is skipped (conservative pruning).
    """
    mats = np.asarray(mats, dtype=float)
    n_dig = mats.shape[0]
    if k == 1:
        idx = np.asarray(first_digits, dtype=np.int64)[:, None]
        logs, P = batch_products(mats, idx)
        lw = None if logp is None else np.asarray(logp)[idx[:, 0]]
        yield logs, P, lw
        return
    L = _split(n_dig, k)
    s_words, s_logs, s_P = _suffix_table(mats, L)
    s_lw = None if logp is None else np.asarray(logp)[s_words].sum(axis=1)
    for f in first_digits:
        for rest in itertools.product(range(n_dig), repeat=k - L - 1):
            prefix = np.array([[f, *rest]], dtype=np.int64)
            p_log, p_P = batch_products(mats, prefix)
            if tail is not None and p_log[0] + tail[L] <= best[0]:
                continue
            P = s_P @ p_P[0]
            c = _norm1(P)
            pos = c > 0
            P[pos] /= c[pos, None, None]
            with np.errstate(divide="ignore"):
                logs = p_log[0] + s_logs + np.log(c)
            lw = None if logp is None else np.asarray(logp)[prefix[0]].sum() + s_lw
            yield logs, P, lw


def word_extremes(mats, k, first_digits, prune=False, tail=None):
    """(max log rho, max log ||.||_1, leaves) over words of length k.

    ``tail[r]`` must bound log max ||M(tau)||_1 over words of length r; it is
    only read when ``prune`` is set.
    """
    best = [-math.inf, -math.inf]
    leaves = 0
    for logs, P, _ in _leaves(mats, k, first_digits, tail=tail if prune else None, best=best):
        leaves += logs.size
        best[1] = max(best[1], float(logs.max()))
        # rho <= min(||.||_1, ||.||_inf): only leaves that can beat the best need rho
        with np.errstate(divide="ignore"):
            bound = logs + np.log(np.minimum(1.0, _norminf(P)))
        cand = np.flatnonzero(bound > best[0])
        if cand.size:
            r = logs[cand] + batch_log_spectral_radius(P[cand])
            best[0] = max(best[0], float(r.max()))
    return best[0], best[1], leaves


def word_min_rho(mats, k, first_digits):
    """min log rho over words of length k starting with one of ``first_digits``."""
    best = math.inf
    for logs, P, _ in _leaves(mats, k, first_digits):
        n = P.shape[-1]
        diag = P[:, np.arange(n), np.arange(n)].max(axis=1)
        lower = np.maximum(diag, np.maximum(P.sum(axis=1).min(axis=1), P.sum(axis=2).min(axis=1)))
        with np.errstate(divide="ignore"):
            lb = logs + np.log(lower)
        cand = np.flatnonzero(lb < best)
        if cand.size:
            r = logs[cand] + batch_log_spectral_radius(P[cand])
            best = min(best, float(r.min()))
    return best


def lyapunov_exact(mats, logp, k, first_digits):
    """Sum over words of p(sigma) * (-log ||M(sigma)||_1)."""
    total = 0.0
    for logs, _, lw in _leaves(mats, k, first_digits, logp=logp):
        total += float(np.dot(np.exp(lw), -logs))
    return total


def neg_log_norms(mats, words):
    """-log ||M(w)||_1 for each row of ``words``."""
    logs, _ = batch_products(mats, words)
    return -logs
