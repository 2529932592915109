"""Local-dimension numbers: closed forms, certified brackets and the report.

Radius brackets from :mod:`mfz.matrices` become dimension brackets through
x -> delta log x with delta = -1/log d < 0, which reverses their order.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .atoms import entropy_sum
from .errors import DegenerateWord
from .matrices import (
    Bracket,
    build_matrices,
    jsr_bounds,
    log_spectral_radius,
    lyapunov_sum,
    min_eta_interior,
    restricted_min_bounds,
    word_product,
)
from .system import DigitSystem

GOLDEN = (1 + math.sqrt(5)) / 2
_WEIGHT_TOL = 1e-15
_ROW_SUM_TOL = 1e-15


def alpha_bar(sys_: DigitSystem) -> float:
    return -math.log(sys_.p[0]) / math.log(sys_.d)


def dim_at_xi(sys_: DigitSystem) -> float:
    return -math.log(sys_.p[-1]) / math.log(sys_.d)


def alpha_lower_bracket(sys_: DigitSystem, k: int, prune: bool = False,
                        threads: int | None = None) -> Bracket:
    r = jsr_bounds(sys_, k, prune=prune, threads=threads)
    dl = sys_.delta
    return Bracket(dl * r.meta["log_upper"], dl * r.meta["log_lower"],
                   {"k": k, "lower_method": "delta log max-norm", "upper_method": "delta log max-rho",
                    "norm": r.meta["norm"]})


def alpha_star_bracket(sys_: DigitSystem, k: int, threads: int | None = None) -> Bracket:
    r = restricted_min_bounds(sys_, k, threads=threads)
    dl = sys_.delta
    return Bracket(dl * r.meta["log_upper"], dl * r.meta["log_lower"],
                   {"k": k, "lower_method": "delta log min-rho (interior start)",
                    "upper_method": "delta log min-eta (interior start)", "norm": r.meta["norm"]})


def alpha_star_upper(sys_: DigitSystem, k: int) -> float:
    """Upper end of the alpha* bracket alone; needs only the atom level k."""
    return sys_.delta * min_eta_interior(sys_, k) / k


def gamma_bracket(sys_: DigitSystem, k_entropy: int, k_lyap: int, mode: str = "exact",
                  samples: int | None = None, seed: int | None = None,
                  threads: int | None = None) -> Bracket:
    """Lyapunov sum below, entropy sum above; Monte Carlo lowers the floor by 3 SE."""
    ly = lyapunov_sum(sys_, k_lyap, mode=mode, samples=samples, seed=seed, threads=threads)
    upper = entropy_sum(sys_, k_entropy)
    meta = {"k_entropy": k_entropy, "k_lyap": k_lyap, "mode": ly.mode,
            "lyapunov": ly.value, "stderr": ly.stderr}
    if ly.mode == "montecarlo":
        meta.update(samples=ly.samples, seed=ly.seed)
    return Bracket(ly.value - 3 * ly.stderr, upper, meta)


def periodic_dim(sys_: DigitSystem, word: Sequence[int]) -> float:
    """Local dimension at the point whose expansion repeats ``word`` forever."""
    w = [int(c) for c in word]
    if not w:
        raise ValueError("word must be non-empty")
    if all(c == 0 for c in w) or all(c == sys_.m for c in w):
        raise DegenerateWord("all-0 and all-m words are excluded")
    s, P = word_product(build_matrices(sys_), w)
    return -(s + log_spectral_radius(P)) / (len(w) * math.log(sys_.d))


def formalism_holds(sys_: DigitSystem) -> bool:
    """m <= 2d - 2 and p_0 equals some p_i with m - d + 1 <= i <= d - 1."""
    d, m = sys_.d, sys_.m
    if m > 2 * d - 2:
        return False
    idx = range(m - d + 1, d)
    if sys_.exact is not None:
        p = sys_.exact
        return any(p[i] == p[0] for i in idx)
    p = sys_.p
    return any(abs(p[i] - p[0]) <= _WEIGHT_TOL for i in idx)


def isolated_top(sys_: DigitSystem) -> bool:
    return sys_.p[0] < min(sys_.p[1:-1])


def golden_closed_form(d: int) -> float:
    if d < 3:
        raise ValueError(f"d must be >= 3, got {d}")
    return (math.log(d + 1) - math.log(GOLDEN)) / math.log(d)


def abs_continuity_certificate(sys_: DigitSystem) -> bool:
    """Bounded-density certificate: every M_i built with a = floor(1 + xi)
    has max row sum <= 1/d."""
    a = math.floor(1 + sys_.xi)
    mats = build_matrices(sys_, a=a).mats
    return bool(mats.sum(axis=2).max() <= 1.0 / sys_.d + _ROW_SUM_TOL)


@dataclass(frozen=True)
class DimensionReport:
    alpha_bar: float
    dim_at_xi: float
    alpha_lower: Bracket
    alpha_star: Bracket
    gamma: Bracket
    formalism_holds: bool
    isolated_top: bool

    def to_dict(self) -> dict:
        out = asdict(self)
        for key in ("alpha_lower", "alpha_star", "gamma"):
            out[key] = getattr(self, key).to_dict()
        out["alpha_bar"] = {"value": self.alpha_bar, "direction": "exact"}
        out["dim_at_xi"] = {"value": self.dim_at_xi, "direction": "exact"}
        return out


def report(sys_: DigitSystem, k: int, k_entropy: int | None = None, k_lyap: int | None = None,
           mode: str = "exact", samples: int | None = None, seed: int | None = None,
           threads: int | None = None) -> DimensionReport:
    return DimensionReport(
        alpha_bar=alpha_bar(sys_),
        dim_at_xi=dim_at_xi(sys_),
        alpha_lower=alpha_lower_bracket(sys_, k, threads=threads),
        alpha_star=alpha_star_bracket(sys_, k, threads=threads),
        gamma=gamma_bracket(sys_, k_entropy or k, k_lyap or k, mode, samples, seed, threads),
        formalism_holds=formalism_holds(sys_),
        isolated_top=isolated_top(sys_),
    )


def interior_periodic_scan(sys_: DigitSystem, max_len: int) -> np.ndarray:
    """periodic_dim over every word of length <= max_len with an interior first digit."""
    import itertools

    out = []
    for n in range(1, max_len + 1):
        for w in itertools.product(range(sys_.m + 1), repeat=n):
            if 0 < w[0] < sys_.m:
                out.append(periodic_dim(sys_, w))
    return np.asarray(out)
