"""Finite-k L^q spectra, auxiliary exponents and discrete Legendre transforms.

Every finite-k value carries a bound direction:

* ``tau`` for q <= 0 is a lower bound (log of the moment sum is subadditive);
  for q > 0 the raw value is shifted by log(floor(xi) + 1)/(k log d) to give an
  upper bound, and q = 1 is exact.
* ``tau_hat`` is always an upper bound: log S^_k is superadditive, so the
  delta-scaled sequence decreases to its limit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import brentq

from .atoms import atom_masses, barrier_block, shat
from .errors import NotConcave, Unresolved
from .system import DigitSystem

EXACT, UPPER, LOWER, APPROX = "exact", "upper_approx", "lower_approx", "approx"
CONCAVITY_TOL = 1e-8
Q_MIN, Q_MAX, Q_STEP = -20.0, 10.0, 0.05


class Estimate(NamedTuple):
    value: float
    direction: str


@dataclass(frozen=True, eq=False)
class SpectrumCurve:
    axis: str
    x: np.ndarray
    values: np.ndarray
    directions: tuple[str, ...]
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.x) != len(self.values) or len(self.x) != len(self.directions):
            raise ValueError("x, values and directions must have equal length")
        if np.any(np.diff(self.x) <= 0):
            raise ValueError("x must be strictly increasing")

    def __len__(self) -> int:
        return len(self.x)

    def second_differences(self) -> np.ndarray:
        ok = np.isfinite(self.values)
        return curvature(self.x[ok], self.values[ok])

    def is_concave(self, tol: float = CONCAVITY_TOL) -> bool:
        return bool(np.all(self.second_differences() <= tol))

    def rows(self):
        for x, v, d in zip(self.x, self.values, self.directions):
            yield float(x), float(v), d


def curvature(x: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Grid-aware second differences: slope change times half the stencil width.

    Equal to the plain second difference on a uniform grid; <= 0 iff concave.
    """
    slopes = np.diff(g) / np.diff(x)
    return np.diff(slopes) * (x[2:] - x[:-2]) / 2


def q_grid(q_min: float = Q_MIN, q_max: float = Q_MAX, q_step: float = Q_STEP) -> np.ndarray:
    if q_step <= 0 or q_max <= q_min:
        raise ValueError("need q_min < q_max and q_step > 0")
    n = int(round((q_max - q_min) / q_step)) + 1
    return np.round(np.linspace(q_min, q_min + (n - 1) * q_step, n), 12)


def _slack(sys_: DigitSystem, k: int) -> float:
    return math.log(math.floor(sys_.xi) + 1) / (k * math.log(sys_.d))


def _log_moments(log_mass: np.ndarray, qs: np.ndarray) -> np.ndarray:
    """log sum_j exp(q x_j) for each q, shifted by the extreme term."""
    lo, hi = float(log_mass.min()), float(log_mass.max())
    buf = np.empty_like(log_mass)
    out = np.empty(len(qs))
    for i, q in enumerate(qs):
        if q == 0:
            out[i] = math.log(log_mass.size)
            continue
        top = q * (hi if q > 0 else lo)
        np.multiply(log_mass, q, out=buf)
        buf -= top
        np.exp(buf, out=buf)
        out[i] = top + math.log(buf.sum())
    return out


def tau_raw(sys_: DigitSystem, q: float, k: int) -> float:
    """delta (1/k) log S_k(q), no direction correction."""
    if q == 1:
        return 0.0
    lm = atom_masses(sys_, k).log_mass
    return float(sys_.delta * _log_moments(lm, np.array([q]))[0] / k)


def tau(sys_: DigitSystem, q: float, k: int) -> Estimate:
    if q == 1:
        return Estimate(0.0, EXACT)
    raw = tau_raw(sys_, q, k)
    if q <= 0:
        return Estimate(raw, LOWER)
    return Estimate(raw + _slack(sys_, k), UPPER)


def tau_slack(sys_: DigitSystem, q: float, k: int) -> float:
    """Shift applied to the raw finite-k tau to certify its direction."""
    return _slack(sys_, k) if q > 0 and q != 1 else 0.0


def tau_curve(sys_: DigitSystem, k: int, qs: Sequence[float] | None = None,
              certified: bool = True) -> SpectrumCurve:
    """tau on a q grid; ``certified=False`` returns the raw (concave) approximant."""
    qs = q_grid() if qs is None else np.asarray(qs, dtype=float)
    lm = atom_masses(sys_, k).log_mass
    vals = sys_.delta * _log_moments(lm, qs) / k
    dirs = []
    for i, q in enumerate(qs):
        if q == 1:
            vals[i] = 0.0
            dirs.append(EXACT)
        elif q <= 0:
            dirs.append(LOWER)
        elif certified:
            vals[i] += _slack(sys_, k)
            dirs.append(UPPER)
        else:
            dirs.append(APPROX)
    return SpectrumCurve("q", qs, vals, tuple(dirs),
                         {"k": k, "method": "tau" if certified else "tau_raw"})


def tau_hat(sys_: DigitSystem, b: int, q: float, k: int) -> Estimate:
    return Estimate(float(sys_.delta * shat(sys_, b, k, q) / k), UPPER)


def tau_hat_curve(sys_: DigitSystem, b: int, k: int, qs: Sequence[float] | None = None) -> SpectrumCurve:
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    qs = q_grid() if qs is None else np.asarray(qs, dtype=float)
    blk = barrier_block(sys_, b, k)
    vals = sys_.delta * _log_moments(blk, qs) / k
    return SpectrumCurve("q", qs, vals, (UPPER,) * len(qs),
                         {"k": k, "b": b, "method": "tau_hat"})


def beta_k(sys_: DigitSystem, b: int, k: int) -> float:
    """The root in (0, 1) of S^_k(beta) = 1."""
    f = lambda q: shat(sys_, b, k, q)
    lo, hi = f(0.0), f(1.0)
    if not (lo > 0 > hi):
        raise Unresolved(f"log S^_k(0)={lo}, log S^_k(1)={hi} do not bracket a root")
    return float(brentq(f, 0.0, 1.0, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500))


def q_crossing(sys_: DigitSystem, b: int, k: int) -> float | None:
    """q0 < 0 where the finite-k tau^ meets alpha_bar * q; None when alpha* = alpha_bar.

    The returned q0 comes from an upper approximant and is itself approximate.
    """
    from .dims import alpha_bar, alpha_star_upper, formalism_holds

    barrier_block(sys_, b, k)  # validates b before anything else
    if formalism_holds(sys_):
        return None
    abar = alpha_bar(sys_)
    top = alpha_star_upper(sys_, k)
    if not top < abar:
        raise Unresolved(f"alpha* upper bound {top:.6g} at k={k} does not separate from "
                         f"alpha_bar={abar:.6g}")
    g = lambda q: tau_hat(sys_, b, q, k).value - abar * q
    hi = 0.0
    lo = -1.0
    while g(lo) <= 0:
        hi, lo = lo, 2 * lo
        if lo < -1e6:
            raise Unresolved("no crossing found above q = -1e6")
    return float(brentq(g, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500))


_UNSET = object()


def tau_piecewise(sys_: DigitSystem, b: int, q: float, k: int, q0=_UNSET) -> Estimate:
    """alpha_bar q below the crossing q0, tau^ above it (tau^ everywhere if q0 is None).

    Pass ``q0`` to reuse a crossing already computed for the same (b, k).
    """
    from .dims import alpha_bar

    if q0 is _UNSET:
        q0 = q_crossing(sys_, b, k)
    if q0 is not None and q <= q0:
        return Estimate(alpha_bar(sys_) * q, EXACT)
    return tau_hat(sys_, b, q, k)


def legendre(curve: SpectrumCurve, at: Sequence[float] | None = None,
             tol: float = CONCAVITY_TOL) -> SpectrumCurve:
    """Discrete concave conjugate g*(a) = min_i (x_i a - g(x_i)).

    By default the conjugate is sampled at the distinct chord slopes of the
    input.  Points given in ``at`` that fall outside the slope range get -inf.
    Minimizers tie toward the smaller x.
    """
    ok = np.isfinite(curve.values)
    x, g = curve.x[ok], curve.values[ok]
    if x.size < 2:
        raise ValueError("need at least two finite points")
    d2 = curvature(x, g)
    if d2.size and d2.max() > tol:
        i = int(d2.argmax())
        raise NotConcave(f"second difference {d2[i]:.3g} > {tol:g} at x={x[i + 1]:.6g}")
    slopes = np.diff(g) / np.diff(x)
    s_lo, s_hi = slopes.min(), slopes.max()
    if at is None:
        alphas = np.unique(slopes)
        inside = np.ones(alphas.size, dtype=bool)
    else:
        alphas = np.asarray(at, dtype=float)
        span = tol * max(1.0, abs(s_lo), abs(s_hi))
        inside = (alphas >= s_lo - span) & (alphas <= s_hi + span)
    vals = np.full(alphas.size, -np.inf)
    arg = np.full(alphas.size, np.nan)
    if inside.any():
        table = alphas[inside, None] * x[None, :] - g[None, :]
        j = table.argmin(axis=1)
        vals[inside] = table[np.arange(j.size), j]
        arg[inside] = x[j]
    new_axis = "alpha" if curve.axis == "q" else "q"
    return SpectrumCurve(new_axis, alphas, vals, (APPROX,) * alphas.size,
                         {**curve.provenance, "conjugate_of": curve.axis, "argmin": arg})


@dataclass(frozen=True, eq=False)
class MultifractalSpectrum:
    curve: SpectrumCurve
    trusted: np.ndarray
    window: tuple[float, float]


def _bounds_k(sys_: DigitSystem, words: int = 10**5) -> int:
    k = 1
    while (sys_.m + 1) ** (k + 1) <= words:
        k += 1
    return k


def multifractal_spectrum(sys_: DigitSystem, b: int, k: int, qs: Sequence[float] | None = None,
                          k_bounds: int | None = None) -> MultifractalSpectrum:
    """Conjugate of the finite-k tau^ curve, flagged trusted inside the certified
    interior (upper end of the alpha_lower bracket, lower end of the alpha* bracket)."""
    from .dims import alpha_lower_bracket, alpha_star_bracket

    curve = legendre(tau_hat_curve(sys_, b, k, qs))
    kb = _bounds_k(sys_) if k_bounds is None else k_bounds
    lo = alpha_lower_bracket(sys_, kb).upper
    hi = alpha_star_bracket(sys_, kb).lower
    a = curve.x
    trusted = (a > lo) & (a < hi) & np.isfinite(curve.values)
    return MultifractalSpectrum(curve, trusted, (lo, hi))


class DimRange(NamedTuple):
    lo: float
    hi: float
    beta_k: float


def dim_range_inner(sys_: DigitSystem, b: int, k: int) -> DimRange:
    """An interval of local dimensions attained by a strongly separated sub-IFS.

    The sub-IFS with weights eta(b, sigma)^beta_k has local dimensions
    beta_k times those of mu at the same points, so its dimension range
    [beta_k delta max log eta / k, beta_k delta min log eta / k] maps back to
    the endpoints below, with no beta_k left over.
    """
    beta = beta_k(sys_, b, k)
    blk = barrier_block(sys_, b, k)
    scale = sys_.delta / k
    return DimRange(float(scale * blk.max()), float(scale * blk.min()), beta)
