"""Digit systems: the weighted IFS {(x + i)/d, p_i : 0 <= i <= m}.

A :class:`DigitSystem` is immutable and hashable, so computed atom levels and
matrix sets can be cached per system.  Derived systems (iterations,
convolutions, flips) are always built explicitly by the caller; nothing here
iterates a system behind the caller's back.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import (
    BadDimensions,
    BarrierNotFound,
    BudgetExceeded,
    NoBarrier,
    NotAProbabilityVector,
    NotRegular,
)

DEFAULT_MAX_ATOMS = 2**28
_SUM_TOL = 1e-12
_REGULAR_RTOL = 1e-12


def _check_probability(p: Sequence[float]) -> None:
    if len(p) < 2:
        raise NotAProbabilityVector(f"need at least two weights, got {len(p)}")
    if any(not math.isfinite(x) or x < 0 for x in p):
        raise NotAProbabilityVector(f"weights must be finite and >= 0: {list(p)}")
    if abs(math.fsum(p) - 1.0) > _SUM_TOL:
        raise NotAProbabilityVector(f"weights sum to {math.fsum(p)!r}, not 1")


def is_regular(p: Sequence[float]) -> bool:
    """True iff both extreme weights are <= every interior weight."""
    _check_probability(p)
    if isinstance(p[0], Fraction):
        return all(p[0] <= x and p[-1] <= x for x in p[1:-1])
    lo = min(p[1:-1], default=math.inf)
    slack = lo * _REGULAR_RTOL
    return p[0] <= lo + slack and p[-1] <= lo + slack


@dataclass(frozen=True)
class DigitSystem:
    """Base ``d``, maximal digit ``m`` and weights ``p_0..p_m``.

    ``exact`` optionally carries the weights as fractions; it is used wherever
    a decision is an exact equality between weights.
    """

    d: int
    m: int
    p: tuple[float, ...]
    exact: tuple[Fraction, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.d < 3 or self.m < self.d:
            raise BadDimensions(f"need d >= 3 and m >= d, got d={self.d}, m={self.m}")
        if len(self.p) != self.m + 1:
            raise NotAProbabilityVector(
                f"expected {self.m + 1} weights for m={self.m}, got {len(self.p)}")
        _check_probability(self.p)

    @property
    def delta(self) -> float:
        return -1.0 / math.log(self.d)

    @property
    def xi(self) -> Fraction:
        return Fraction(self.m, self.d - 1)

    @property
    def theta(self) -> float:
        positive = [x for x in self.p if x > 0]
        return max(positive) / min(positive)

    @property
    def a(self) -> int:
        return 1 + (self.m - self.d) // (self.d - 1)

    @property
    def digits(self) -> range:
        return range(self.m + 1)

    @cached_property
    def log_p(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            out = np.log(np.asarray(self.p, dtype=float))
        out.flags.writeable = False
        return out

    def n_atoms(self, k: int) -> int:
        """Number of level-k atoms, J_k + 1 with J_k = m (d^k - 1)/(d - 1)."""
        return self.m * (self.d**k - 1) // (self.d - 1) + 1

    def to_spec(self) -> dict:
        return {"d": self.d, "m": self.m, "p": list(self.p)}


def new_system(d: int, m: int, p: Sequence[float | Fraction | str]) -> DigitSystem:
    """Validated, regular digit system.

    Weights may be floats, fractions or strings such as ``"3/8"``; exact
    inputs are kept alongside their float values.
    """
    exact = None
    if any(isinstance(x, (Fraction, str)) for x in p):
        exact = tuple(Fraction(x) for x in p)
        if sum(exact) != 1:
            raise NotAProbabilityVector(f"exact weights sum to {sum(exact)}")
        floats = tuple(float(x) for x in exact)
    else:
        floats = tuple(float(x) for x in p)
    sys_ = DigitSystem(int(d), int(m), floats, exact)
    if min(floats) <= 0:
        raise NotAProbabilityVector("weights must be strictly positive")
    if not is_regular(exact if exact is not None else floats):
        raise NotRegular(
            f"p_0={floats[0]:g} or p_m={floats[-1]:g} exceeds an interior weight; "
            "flip or iterate first")
    return sys_


def flip(sys_: DigitSystem) -> DigitSystem:
    """Mirror the measure (x -> xi - x) when p_0 > p_m, so that p_0 <= p_m."""
    if sys_.p[0] <= sys_.p[-1]:
        return sys_
    exact = tuple(reversed(sys_.exact)) if sys_.exact is not None else None
    return DigitSystem(sys_.d, sys_.m, tuple(reversed(sys_.p)), exact)


def iterate(sys_: DigitSystem, k: int, max_atoms: int = DEFAULT_MAX_ATOMS) -> DigitSystem:
    """The same attractor written in base d^k, with the level-k atom masses as weights."""
    from .atoms import atom_masses

    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k == 1:
        return sys_
    n = sys_.n_atoms(k)
    if n > max_atoms:
        raise BudgetExceeded(f"iterate(k={k}) needs {n} atoms > budget {max_atoms}")
    w = np.exp(atom_masses(sys_, k, max_atoms=max_atoms).log_mass)
    w /= math.fsum(w)
    return DigitSystem(sys_.d**k, n - 1, tuple(float(x) for x in w))


def convolve_weights(p: Sequence[float], p2: Sequence[float]) -> tuple[float, ...]:
    """Weights of mu * mu' for two systems sharing the base d."""
    for v in (p, p2):
        if any(x < 0 for x in v) or abs(math.fsum(v) - 1.0) > _SUM_TOL:
            raise NotAProbabilityVector(f"not a probability vector: {list(v)}")
    return tuple(float(x) for x in np.convolve(np.asarray(p, float), np.asarray(p2, float)))


def regularity_threshold(m: int) -> float:
    """Smallest bias making the m-fold biased Cantor convolution regular."""
    if m < 2:
        raise ValueError(f"m must be >= 2, got {m}")
    return 1.0 / (1.0 + m ** (1.0 / (m - 1)))


def cantor_convolution(k: int, bias: float | Fraction | str = Fraction(1, 2)) -> DigitSystem:
    """k-fold convolution of the biased middle-third Cantor measure.

    Weights are C(k, i) (1 - bias)^i bias^(k - i) in base 3, computed exactly
    from the (binary) value of ``bias``.
    """
    b = Fraction(bias)
    if not 0 < b <= Fraction(1, 2):
        raise ValueError(f"bias must lie in (0, 1/2], got {bias}")
    exact = [math.comb(k, i) * (1 - b) ** i * b ** (k - i) for i in range(k + 1)]
    return new_system(3, k, exact)


def uniform(d: int, m: int) -> DigitSystem:
    return new_system(d, m, [Fraction(1, m + 1)] * (m + 1))


def _barrier_range(sys_: DigitSystem, k: int) -> range:
    # (xi - 1) d^k < j  and  j + xi < d^k, decided in exact rationals
    xi = sys_.xi
    scale = sys_.d**k
    lo = math.floor((xi - 1) * scale) + 1
    hi = math.ceil(scale - xi) - 1
    return range(max(lo, 0), min(hi, sys_.n_atoms(k) - 1) + 1)


def barrier_digits(sys_: DigitSystem) -> list[int]:
    """Digits b of this system that are barriers (empty when none)."""
    if sys_.xi >= 2:
        return []
    return list(_barrier_range(sys_, 1))


def find_barrier(sys_: DigitSystem, max_level: int = 4) -> tuple[int, list[int]]:
    """Smallest level k <= max_level with barrier atoms, and all those atoms.

    Each returned atom j becomes a barrier digit of ``iterate(sys_, k)``.
    """
    if sys_.xi >= 2:
        raise NoBarrier(f"xi = {sys_.xi} >= 2: no barrier digit exists at any level")
    for k in range(1, max_level + 1):
        found = list(_barrier_range(sys_, k))
        if found:
            return k, found
    raise BarrierNotFound(f"no barrier atom up to level {max_level}")


def system_from_spec(spec: dict) -> DigitSystem:
    """Build a system from its JSON description (see README)."""
    if "iterate" in spec:
        inner = spec["iterate"]
        return iterate(system_from_spec(inner["of"]), int(inner["k"]))
    preset = spec.get("preset")
    if preset == "cantor_convolution":
        return cantor_convolution(int(spec["k"]), spec.get("bias", Fraction(1, 2)))
    if preset == "uniform":
        return uniform(int(spec["d"]), int(spec["m"]))
    if preset is not None:
        raise ValueError(f"unknown preset {preset!r}")
    try:
        d, m, p = spec["d"], spec["m"], spec["p"]
    except KeyError as exc:
        raise ValueError(f"system spec is missing {exc}") from None
    return new_system(d, m, p)
