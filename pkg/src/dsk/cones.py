"""Regular and limiting normal cones of unions of boxes as sign-cone products."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .config import DEFAULT
from .errors import DimensionError, TooLargeError
from .geometry import OrthoDisjunctiveSet, require_member

PATTERN_CAP = 3**14


class SignConstraint(enum.Enum):
    ZERO = "{0}"
    NONPOS = "R-"
    NONNEG = "R+"
    FREE = "R"

    def __str__(self):
        return self.value

    def includes(self, other: "SignConstraint") -> bool:
        """Set inclusion ``other ⊆ self`` in the four-element lattice."""
        if self is other or self is SignConstraint.FREE:
            return True
        return other is SignConstraint.ZERO

    def meet(self, other: "SignConstraint") -> "SignConstraint":
        if self.includes(other):
            return other
        if other.includes(self):
            return self
        return SignConstraint.ZERO

    def admits(self, v: float, tol: float) -> bool:
        if self is SignConstraint.FREE:
            return True
        if self is SignConstraint.ZERO:
            return abs(v) <= tol
        if self is SignConstraint.NONPOS:
            return v <= tol
        return v >= -tol

    def sample(self, rng: np.random.Generator, scale: float = 1.0) -> float:
        if self is SignConstraint.ZERO:
            return 0.0
        v = rng.standard_normal() * scale
        if self is SignConstraint.NONPOS:
            return -abs(v)
        if self is SignConstraint.NONNEG:
            return abs(v)
        return v

    @staticmethod
    def parse(text: str) -> "SignConstraint":
        t = text.strip()
        for s in SignConstraint:
            if s.value == t:
                return s
        aliases = {"0": SignConstraint.ZERO, "R_-": SignConstraint.NONPOS, "R_+": SignConstraint.NONNEG}
        if t in aliases:
            return aliases[t]
        raise ValueError(f"unknown sign constraint {text!r}")


Z, NP, NN, FR = SignConstraint.ZERO, SignConstraint.NONPOS, SignConstraint.NONNEG, SignConstraint.FREE


@dataclass(frozen=True)
class SignCone:
    """Product of per-coordinate sign constraints."""

    constraints: tuple

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))

    @staticmethod
    def parse(text: str) -> "SignCone":
        """Parse a rendering such as ``"R+ x R- x {0}"``."""
        return SignCone(tuple(SignConstraint.parse(p) for p in text.split(" x ")))

    @property
    def dim(self) -> int:
        return len(self.constraints)

    def includes(self, other: "SignCone") -> bool:
        return all(a.includes(b) for a, b in zip(self.constraints, other.constraints))

    def contains(self, lam, tol: float = DEFAULT.cone) -> bool:
        lam = np.asarray(lam, dtype=float).reshape(-1)
        if lam.shape[0] != self.dim:
            raise DimensionError(f"cone has dimension {self.dim}, vector {lam.shape[0]}")
        return all(c.admits(v, tol) for c, v in zip(self.constraints, lam))

    def support(self) -> frozenset:
        return frozenset(i for i, c in enumerate(self.constraints) if c is not Z)

    def sample(self, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
        return np.array([c.sample(rng, scale) for c in self.constraints])

    def meet(self, other: "SignCone") -> "SignCone":
        return SignCone(tuple(a.meet(b) for a, b in zip(self.constraints, other.constraints)))

    def __str__(self):
        return " x ".join(str(c) for c in self.constraints)


@dataclass(frozen=True)
class SignConeUnion:
    """Finite union of sign cones with duplicates and dominated members removed."""

    cones: tuple

    def __post_init__(self):
        object.__setattr__(self, "cones", _prune(self.cones))

    def contains(self, lam, tol: float = DEFAULT.cone) -> bool:
        return any(c.contains(lam, tol) for c in self.cones)

    def includes(self, cone: SignCone) -> bool:
        """Lattice-level inclusion of one sign cone in some member."""
        return any(c.includes(cone) for c in self.cones)

    def as_set(self) -> frozenset:
        return frozenset(c.constraints for c in self.cones)

    def __eq__(self, other):
        if not isinstance(other, SignConeUnion):
            return NotImplemented
        return self.as_set() == other.as_set()

    def __hash__(self):
        return hash(self.as_set())

    def __len__(self):
        return len(self.cones)

    def __iter__(self):
        return iter(self.cones)

    def __str__(self):
        return " U ".join(f"({c})" for c in self.cones)


def _prune(cones) -> tuple:
    unique = []
    for c in cones:
        if c not in unique:
            unique.append(c)
    kept = []
    for i, c in enumerate(unique):
        dominated = any(j != i and d.includes(c) for j, d in enumerate(unique))
        if not dominated:
            kept.append(c)
    return tuple(kept)


def cone_membership(cone, lam, tol: float = DEFAULT.cone) -> bool:
    return cone.contains(lam, tol)


def _regular_from_hits(ell, hit_rows) -> SignCone:
    """Combine per-component coordinate states into the regular cone.

    ``hit_rows`` has one entry per active component, each a list of per-coordinate
    tuples ``(at_lower, at_upper, degenerate)``.
    """
    out = []
    for i in range(ell):
        states = [row[i] for row in hit_rows]
        if not all(lo or hi for lo, hi, _ in states):
            out.append(Z)
        elif all(deg for _, _, deg in states):
            out.append(FR)
        elif all(lo for lo, _, _ in states):
            out.append(NP)
        elif all(hi for _, hi, _ in states):
            out.append(NN)
        else:
            out.append(Z)
    return SignCone(tuple(out))


def regular_normal_cone(gamma: OrthoDisjunctiveSet, y, tol: float = DEFAULT.act) -> SignCone:
    data = require_member(gamma, y, tol)
    cons = []
    for i in range(gamma.dim):
        if i in data.I_eq:
            cons.append(FR)
        elif i in data.I_down:
            cons.append(NP)
        elif i in data.I_up:
            cons.append(NN)
        else:
            cons.append(Z)
    return SignCone(tuple(cons))


def _coordinate_states(gamma, y, J, tol):
    states = {}
    for j in J:
        row = []
        for i, iv in enumerate(gamma.components[j].intervals):
            row.append((iv.at_lower(y[i], tol), iv.at_upper(y[i], tol), iv.degenerate))
        states[j] = row
    return states


def pattern_cones(gamma: OrthoDisjunctiveSet, y, tol: float = DEFAULT.act, cap: int = PATTERN_CAP):
    """Enumerate infinitesimal perturbation patterns at ``y``.

    Yields ``(s, J_s, cone)`` for every sign vector ``s`` (zero outside
    ``I_exists``) whose virtual point ``y + eps*s`` stays in some active
    component; ``cone`` is the regular normal cone there.
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    data = require_member(gamma, y, tol)
    active = sorted(data.I_exists)
    if 3 ** len(active) > cap:
        raise TooLargeError(
            f"{3 ** len(active)} perturbation patterns exceed the cap of {cap}"
        )
    J = sorted(data.J)
    states = _coordinate_states(gamma, y, J, tol)
    ell = gamma.dim

    def allowed(j, i, s):
        lo, hi, deg = states[j][i]
        if s == 0:
            return True
        if deg:
            return False
        if s < 0:
            return not lo
        return not hi

    results = []

    def rec(pos, s, comps):
        if not comps:
            return
        if pos == len(active):
            rows = []
            for j in comps:
                row = []
                for i in range(ell):
                    if s[i] != 0:
                        row.append((False, False, False))
                    else:
                        row.append(states[j][i])
                rows.append(row)
            results.append((tuple(s), tuple(comps), _regular_from_hits(ell, rows)))
            return
        i = active[pos]
        for si in (0, -1, 1):
            nxt = [j for j in comps if allowed(j, i, si)]
            s[i] = si
            rec(pos + 1, s, nxt)
            s[i] = 0

    rec(0, [0] * ell, J)
    return results


def limiting_normal_cone(
    gamma: OrthoDisjunctiveSet, y, tol: float = DEFAULT.act, cap: int = PATTERN_CAP
) -> SignConeUnion:
    return SignConeUnion(tuple(c for _, _, c in pattern_cones(gamma, y, tol, cap)))


def component_regular_cone(gamma: OrthoDisjunctiveSet, j: int, y, tol: float = DEFAULT.act) -> SignCone:
    """Regular normal cone of the single box ``j`` at a point of that box."""
    y = np.asarray(y, dtype=float).reshape(-1)
    row = _coordinate_states(gamma, y, [j], tol)[j]
    return _regular_from_hits(gamma.dim, [row])
