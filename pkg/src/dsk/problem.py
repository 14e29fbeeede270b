"""Problem containers and the embedding of complementarity constraints."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT
from .errors import DimensionError, InfeasiblePointError, TooLargeError
from .expr import Expr, Neg, as_expr, evaluate, value_and_grad
from .geometry import POS_INF, NEG_INF, Box, ExtendedInterval, ExtendedReal, OrthoDisjunctiveSet

MAX_COMPLEMENTARITY_PAIRS = 12

_ZERO = ExtendedReal.of(0.0)
NONPOS = ExtendedInterval(NEG_INF, _ZERO)
NONNEG = ExtendedInterval(_ZERO, POS_INF)
POINT0 = ExtendedInterval(_ZERO, _ZERO)


def _vec(x, n):
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != n:
        raise DimensionError(f"expected a vector of length {n}, got {x.shape[0]}")
    return x


def _values(exprs, x):
    return np.array([evaluate(e, x) for e in exprs], dtype=float)


def _jacobian(exprs, x):
    if not exprs:
        return np.zeros((0, len(x)))
    return np.array([value_and_grad(e, x)[1] for e in exprs])


@dataclass(frozen=True)
class DisjunctiveProblem:
    """min f(x) subject to F(x) in a union of boxes."""

    n: int
    objective: Expr
    constraint_map: tuple
    gamma: OrthoDisjunctiveSet
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "objective", as_expr(self.objective, self.n))
        cmap = tuple(as_expr(e, self.n) for e in self.constraint_map)
        object.__setattr__(self, "constraint_map", cmap)
        if len(cmap) != self.gamma.dim:
            raise DimensionError(
                f"constraint map has {len(cmap)} components but the set has dimension {self.gamma.dim}"
            )

    @property
    def ell(self) -> int:
        return len(self.constraint_map)

    def f(self, x) -> float:
        return evaluate(self.objective, _vec(x, self.n))

    def grad_f(self, x) -> np.ndarray:
        return value_and_grad(self.objective, _vec(x, self.n))[1]

    def F(self, x) -> np.ndarray:
        return _values(self.constraint_map, _vec(x, self.n))

    def jacobian(self, x) -> np.ndarray:
        """Rows are the gradients of the constraint-map components."""
        return _jacobian(self.constraint_map, _vec(x, self.n))

    def lagrangian_gradient(self, x, lam) -> np.ndarray:
        lam = _vec(lam, self.ell)
        return self.grad_f(x) + self.jacobian(x).T @ lam

    def is_feasible(self, x, tol: float = DEFAULT.act) -> bool:
        return self.gamma.contains(self.F(x), tol)

    def require_feasible(self, x, tol: float = DEFAULT.act):
        if not self.is_feasible(x, tol):
            raise InfeasiblePointError(f"x = {np.asarray(x, dtype=float).tolist()} is infeasible")


@dataclass(frozen=True)
class MpccIndexSets:
    """Active index data of a (perturbed) complementarity system, 0-based."""

    I0plus: frozenset
    Iplus0: frozenset
    I00: frozenset
    Ig: frozenset

    @property
    def IG(self) -> frozenset:
        return self.I00 | self.I0plus

    @property
    def IH(self) -> frozenset:
        return self.I00 | self.Iplus0


@dataclass(frozen=True)
class MpccProblem:
    """min f s.t. g <= 0, h = 0, 0 <= G perp H >= 0."""

    n: int
    f: Expr
    g: tuple = ()
    h: tuple = ()
    G: tuple = ()
    H: tuple = ()
    name: str = ""
    _embedded: list = field(default_factory=list, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "f", as_expr(self.f, self.n))
        for key in ("g", "h", "G", "H"):
            object.__setattr__(self, key, tuple(as_expr(e, self.n) for e in getattr(self, key)))
        if len(self.G) != len(self.H):
            raise DimensionError("G and H must have the same length")
        if len(self.G) < 1:
            raise DimensionError("at least one complementarity pair is required")

    @property
    def m(self):
        return len(self.g)

    @property
    def p(self):
        return len(self.h)

    @property
    def q(self):
        return len(self.G)

    @property
    def ell(self):
        return self.m + self.p + 2 * self.q

    # block layout (g, h, G, H) <-> embedded interleaving (g, h, -G1, -H1, ...)
    def split(self, v):
        v = _vec(v, self.ell)
        m, p, q = self.m, self.p, self.q
        return v[:m], v[m : m + p], v[m + p : m + p + q], v[m + p + q :]

    def join(self, vg, vh, vG, vH) -> np.ndarray:
        return np.concatenate([np.asarray(a, dtype=float).reshape(-1) for a in (vg, vh, vG, vH)])

    def to_embedded(self, v) -> np.ndarray:
        vg, vh, vG, vH = self.split(v)
        inter = np.empty(2 * self.q)
        inter[0::2] = vG
        inter[1::2] = vH
        return np.concatenate([vg, vh, inter])

    def from_embedded(self, w) -> np.ndarray:
        w = _vec(w, self.ell)
        m, p = self.m, self.p
        inter = w[m + p :]
        return self.join(w[:m], w[m : m + p], inter[0::2], inter[1::2])

    def values(self, x):
        x = _vec(x, self.n)
        return tuple(_values(es, x) for es in (self.g, self.h, self.G, self.H))

    def jacobians(self, x):
        x = _vec(x, self.n)
        return tuple(_jacobian(es, x) for es in (self.g, self.h, self.G, self.H))

    def grad_f(self, x):
        return value_and_grad(self.f, _vec(x, self.n))[1]

    def lagrangian_gradient(self, x, lam) -> np.ndarray:
        """grad f + Jg' lg + Jh' lh - JG' lG - JH' lH."""
        lg, lh, lG, lH = self.split(lam)
        Jg, Jh, JG, JH = self.jacobians(x)
        return self.grad_f(x) + Jg.T @ lg + Jh.T @ lh - JG.T @ lG - JH.T @ lH

    def embed(self) -> DisjunctiveProblem:
        if self._embedded:
            return self._embedded[0]
        dp = embed_mpcc(self)
        self._embedded.append(dp)
        return dp


def embed_mpcc(p: MpccProblem, max_pairs: int = MAX_COMPLEMENTARITY_PAIRS) -> DisjunctiveProblem:
    """Rewrite the complementarity system as F(x) in a union of 2**q boxes.

    Components follow the lexicographic order of multi-indices in {1,2}^q, where
    choice 1 stands for {0} x R- and choice 2 for R- x {0} on (-G_i, -H_i).
    """
    if p.q > max_pairs:
        raise TooLargeError(f"q = {p.q} exceeds the cap of {max_pairs} complementarity pairs")
    cmap = list(p.g) + list(p.h)
    for Gi, Hi in zip(p.G, p.H):
        cmap += [Neg(Gi), Neg(Hi)]
    prefix = [NONPOS] * p.m + [POINT0] * p.p
    comps = []
    for choice in itertools.product((1, 2), repeat=p.q):
        ivs = list(prefix)
        for c in choice:
            ivs += [POINT0, NONPOS] if c == 1 else [NONPOS, POINT0]
        comps.append(Box(tuple(ivs)))
    return DisjunctiveProblem(p.n, p.f, tuple(cmap), OrthoDisjunctiveSet(tuple(comps)), name=p.name)


def component_choices(q: int):
    return list(itertools.product((1, 2), repeat=q))


def mpcc_index_sets(p: MpccProblem, x, delta=None, tol: float = DEFAULT.act) -> MpccIndexSets:
    """Index sets of the system perturbed by ``delta`` (block layout, default 0)."""
    vg, vh, vG, vH = p.values(x)
    if delta is None:
        dg, dh, dG, dH = np.zeros(p.m), np.zeros(p.p), np.zeros(p.q), np.zeros(p.q)
    else:
        dg, dh, dG, dH = p.split(delta)
    sg = vg - dg
    sh = vh - dh
    sG = vG + dG
    sH = vH + dH
    bad = []
    bad += [f"g{i + 1}" for i in range(p.m) if sg[i] > tol]
    bad += [f"h{i + 1}" for i in range(p.p) if abs(sh[i]) > tol]
    for i in range(p.q):
        if sG[i] < -tol or sH[i] < -tol or min(abs(sG[i]), abs(sH[i])) > tol:
            bad.append(f"pair {i + 1}")
    if bad:
        raise InfeasiblePointError("perturbed system violated at " + ", ".join(bad))
    aG = [abs(v) <= tol for v in sG]
    aH = [abs(v) <= tol for v in sH]
    fz = frozenset
    return MpccIndexSets(
        I0plus=fz(i for i in range(p.q) if aG[i] and not aH[i]),
        Iplus0=fz(i for i in range(p.q) if aH[i] and not aG[i]),
        I00=fz(i for i in range(p.q) if aG[i] and aH[i]),
        Ig=fz(i for i in range(p.m) if abs(sg[i]) <= tol),
    )
