"""Extended-real intervals, boxes and finite unions of boxes.

Coordinates and component indices are 0-based throughout the library; reports
render them 1-based.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import total_ordering
from typing import Iterable, Sequence

import numpy as np

from .config import DEFAULT
from .errors import DimensionError, InvalidIntervalError


@total_ordering
@dataclass(frozen=True)
class ExtendedReal:
    """A real number or one of the two infinities, stored as a tag plus value.

    ``kind`` is -1 for minus infinity, +1 for plus infinity and 0 for a finite
    number held in ``value``.  Comparisons are exact and total; IEEE infinities
    never enter the arithmetic.
    """

    kind: int
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in (-1, 0, 1):
            raise ValueError("kind must be -1, 0 or 1")
        if self.kind == 0 and not math.isfinite(self.value):
            raise ValueError("finite ExtendedReal needs a finite value")
        if self.kind != 0 and self.value != 0.0:
            object.__setattr__(self, "value", 0.0)

    @staticmethod
    def of(v) -> "ExtendedReal":
        """Coerce a number, an ``ExtendedReal`` or the strings "inf"/"-inf"."""
        if isinstance(v, ExtendedReal):
            return v
        if isinstance(v, str):
            s = v.strip().lower()
            if s in ("inf", "+inf", "infinity", "+infinity"):
                return POS_INF
            if s in ("-inf", "-infinity"):
                return NEG_INF
            v = float(s)
        v = float(v)
        if math.isnan(v):
            raise ValueError("NaN is not an extended real")
        if math.isinf(v):
            return POS_INF if v > 0 else NEG_INF
        return ExtendedReal(0, v)

    @property
    def is_finite(self) -> bool:
        return self.kind == 0

    def _key(self):
        return (self.kind, self.value)

    def __lt__(self, other):
        other = ExtendedReal.of(other)
        return self._key() < other._key()

    def __eq__(self, other):
        try:
            other = ExtendedReal.of(other)
        except (TypeError, ValueError):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __float__(self):
        if self.kind == 0:
            return self.value
        return math.inf if self.kind > 0 else -math.inf

    def to_json(self):
        if self.kind == 0:
            return self.value
        return "inf" if self.kind > 0 else "-inf"

    def __str__(self):
        if self.kind == 0:
            return repr(self.value)
        return "inf" if self.kind > 0 else "-inf"


NEG_INF = ExtendedReal(-1)
POS_INF = ExtendedReal(1)


@dataclass(frozen=True)
class ExtendedInterval:
    """Closed interval [lower, upper] over the extended reals."""

    lower: ExtendedReal
    upper: ExtendedReal

    def __post_init__(self):
        lo, hi = ExtendedReal.of(self.lower), ExtendedReal.of(self.upper)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if hi < lo:
            raise InvalidIntervalError(f"empty interval [{lo}, {hi}]")
        if lo == hi and not lo.is_finite:
            raise InvalidIntervalError(f"degenerate interval at {lo} is not allowed")
        if lo == POS_INF or hi == NEG_INF:
            raise InvalidIntervalError(f"interval [{lo}, {hi}] contains no real number")

    @property
    def degenerate(self) -> bool:
        return self.lower == self.upper

    def contains(self, v: float, tol: float = 0.0) -> bool:
        if self.lower.is_finite and v < self.lower.value - tol:
            return False
        if self.upper.is_finite and v > self.upper.value + tol:
            return False
        return True

    def at_lower(self, v: float, tol: float = 0.0) -> bool:
        return self.lower.is_finite and abs(v - self.lower.value) <= tol

    def at_upper(self, v: float, tol: float = 0.0) -> bool:
        return self.upper.is_finite and abs(v - self.upper.value) <= tol

    def clamp(self, v: float) -> float:
        if self.lower.is_finite and v < self.lower.value:
            return self.lower.value
        if self.upper.is_finite and v > self.upper.value:
            return self.upper.value
        return v

    def __str__(self):
        if self.degenerate:
            return "{%s}" % self.lower
        lo = "(-inf" if not self.lower.is_finite else f"[{self.lower}"
        hi = "inf)" if not self.upper.is_finite else f"{self.upper}]"
        return f"{lo}, {hi}"


def interval(lo, hi) -> ExtendedInterval:
    return ExtendedInterval(ExtendedReal.of(lo), ExtendedReal.of(hi))


@dataclass(frozen=True)
class Box:
    intervals: tuple

    def __post_init__(self):
        ivs = tuple(
            iv if isinstance(iv, ExtendedInterval) else interval(*iv) for iv in self.intervals
        )
        if not ivs:
            raise DimensionError("a box needs at least one coordinate")
        object.__setattr__(self, "intervals", ivs)

    @property
    def dim(self) -> int:
        return len(self.intervals)

    def contains(self, y: Sequence[float], tol: float = 0.0) -> bool:
        return all(iv.contains(v, tol) for iv, v in zip(self.intervals, y))

    def project(self, z: Sequence[float]) -> np.ndarray:
        return np.array([iv.clamp(v) for iv, v in zip(self.intervals, z)], dtype=float)

    def has_interior(self) -> bool:
        return not any(iv.degenerate for iv in self.intervals)

    def __str__(self):
        return " x ".join(str(iv) for iv in self.intervals)


@dataclass(frozen=True)
class OrthoDisjunctiveSet:
    """The union of finitely many boxes of a common dimension."""

    components: tuple

    def __post_init__(self):
        comps = tuple(c if isinstance(c, Box) else Box(tuple(c)) for c in self.components)
        if not comps:
            raise DimensionError("at least one component is required")
        dims = {c.dim for c in comps}
        if len(dims) != 1:
            raise DimensionError(f"components have different dimensions {sorted(dims)}")
        object.__setattr__(self, "components", comps)

    @staticmethod
    def from_bounds(bounds: Iterable) -> "OrthoDisjunctiveSet":
        """Build from nested ``[[[lo, hi], ...], ...]`` lists (one list per box)."""
        return OrthoDisjunctiveSet(tuple(Box(tuple(interval(lo, hi) for lo, hi in b)) for b in bounds))

    @property
    def dim(self) -> int:
        return self.components[0].dim

    @property
    def n_components(self) -> int:
        return len(self.components)

    def contains(self, y, tol: float = DEFAULT.act) -> bool:
        y = _as_vector(y, self.dim)
        return any(c.contains(y, tol) for c in self.components)

    def to_json(self):
        return [
            [[iv.lower.to_json(), iv.upper.to_json()] for iv in c.intervals] for c in self.components
        ]

    def __str__(self):
        return " U ".join(f"({c})" for c in self.components)


@dataclass(frozen=True)
class ActiveIndexData:
    """Active components and the coordinate classification at a point of the set.

    ``I_eq``: every active component is degenerate there; ``I_down``: every
    active component sits at its lower bound; ``I_up``: at its upper bound;
    ``I_updown``: the remaining coordinates of ``I_forall``.
    """

    J: frozenset
    I_exists: frozenset
    I_forall: frozenset
    I_eq: frozenset
    I_down: frozenset
    I_up: frozenset
    I_updown: frozenset

    @property
    def is_member(self) -> bool:
        return bool(self.J)


def _as_vector(y, dim: int) -> np.ndarray:
    arr = np.asarray(y, dtype=float).reshape(-1)
    if arr.shape[0] != dim:
        raise DimensionError(f"expected a vector of length {dim}, got {arr.shape[0]}")
    return arr


def membership(gamma: OrthoDisjunctiveSet, y, tol: float = DEFAULT.act) -> ActiveIndexData | None:
    """Active index data of ``y`` in ``gamma``, or ``None`` if ``y`` is not a member."""
    y = _as_vector(y, gamma.dim)
    J = [j for j, c in enumerate(gamma.components) if c.contains(y, tol)]
    if not J:
        return None
    ell = gamma.dim
    exists, forall, eq, down, up, updown = set(), set(), set(), set(), set(), set()
    for i in range(ell):
        hits = []
        for j in J:
            iv = gamma.components[j].intervals[i]
            lo, hi = iv.at_lower(y[i], tol), iv.at_upper(y[i], tol)
            hits.append((lo or hi, lo, hi, iv.degenerate))
        if any(h[0] for h in hits):
            exists.add(i)
        if all(h[0] for h in hits):
            forall.add(i)
            if all(h[3] for h in hits):
                eq.add(i)
            elif all(h[1] for h in hits):
                down.add(i)
            elif all(h[2] for h in hits):
                up.add(i)
            else:
                updown.add(i)
    fz = frozenset
    return ActiveIndexData(fz(J), fz(exists), fz(forall), fz(eq), fz(down), fz(up), fz(updown))


def require_member(gamma: OrthoDisjunctiveSet, y, tol: float = DEFAULT.act) -> ActiveIndexData:
    from .errors import InfeasiblePointError

    data = membership(gamma, y, tol)
    if data is None:
        raise InfeasiblePointError(f"point {np.asarray(y, dtype=float).tolist()} is not in the set")
    return data


def project_onto_union(gamma: OrthoDisjunctiveSet, z, candidates=None):
    """Euclidean projection of ``z`` onto the union of boxes.

    Returns ``(y, j)`` with ``j`` the index of the winning component; ties go to
    the smallest index.  ``candidates`` optionally restricts the components.
    """
    z = _as_vector(z, gamma.dim)
    best = None
    idx = range(gamma.n_components) if candidates is None else candidates
    for j in idx:
        y = gamma.components[j].project(z)
        d = float(np.sum((z - y) ** 2))
        if best is None or d < best[0]:
            best = (d, y, j)
    if best is None:
        raise ValueError("no candidate components given")
    return best[1], best[2]


def minimal_gap(gamma: OrthoDisjunctiveSet, y, tol: float = DEFAULT.act) -> float:
    """Smallest positive distance from ``y`` to a finite bound it does not touch.

    Perturbations shorter than this cannot create new activity.
    """
    y = _as_vector(y, gamma.dim)
    gap = math.inf
    for c in gamma.components:
        for i, iv in enumerate(c.intervals):
            for b in (iv.lower, iv.upper):
                if b.is_finite:
                    d = abs(y[i] - b.value)
                    if d > tol:
                        gap = min(gap, d)
    return gap
