"""Finite-prefix surrogates for "tends to zero" and "liminf >= 0".

A nonnegative sequence is accepted as vanishing when its last value is below
the tolerance, or when its tail is non-increasing and a fitted decay model
``L + C*k**(-p)`` or ``L + C*rho**k`` (k = position in the prefix, C >= 0)
puts the limit ``L`` below the tolerance.  Vector sequences whose coordinates
decay at different rates are also accepted coordinate by coordinate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np
from scipy.optimize import minimize_scalar

MIN_TAIL = 4
_POWERS = np.linspace(0.25, 4.0, 76)
_RATIOS = np.linspace(0.05, 0.95, 91)


@dataclass
class TrendReport:
    final: float
    limit_estimate: float | None
    monotone_tail: bool
    rule: str
    passed: bool

    def to_json(self):
        return asdict(self)


def _fit(basis, r: np.ndarray):
    """Least squares r ~ L + sum C_i*basis_i with all C_i >= 0; returns (sse, L).

    A negative coefficient drops that column and refits, so the result is the
    best fit over the admissible faces reached this way.
    """
    cols = list(basis) if isinstance(basis, tuple) else [basis]
    while True:
        A = np.column_stack([np.ones_like(r)] + cols)
        coef, *_ = np.linalg.lstsq(A, r, rcond=None)
        neg = [i for i, c in enumerate(coef[1:]) if c < 0]
        if not neg:
            break
        cols = [c for i, c in enumerate(cols) if i not in neg]
    sse = float(np.sum((A @ coef - r) ** 2))
    return sse, float(coef[0])


def estimate_limit(k, r) -> tuple[float, float]:
    """Fitted limit of a decaying tail ``r`` at positions ``k`` and the RMS misfit.

    Each model family is scanned on a grid and the best grid point is refined
    by bounded scalar minimization within its neighbouring cells.
    """
    families = [
        (_POWERS, lambda q: k ** (-q)),
        (_RATIOS, lambda rho: rho ** (k - k[0] + 1)),
    ]
    best = None
    for grid, basis in families:
        sse = [_fit(basis(v), r)[0] for v in grid]
        i = int(np.argmin(sse))
        lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
        res = minimize_scalar(lambda v: _fit(basis(v), r)[0], bounds=(lo, hi), method="bounded")
        v = res.x if res.fun < sse[i] else grid[i]
        cand = _fit(basis(v), r)
        if best is None or cand[0] < best[0]:
            best = cand
    return best[1], math.sqrt(best[0] / len(r))


def vanishing(values, tol: float, mode: str = "extrapolate") -> TrendReport:
    """Decide whether a sequence of norms tends to zero on its finite prefix.

    ``mode="final"`` uses only the last value; ``"extrapolate"`` additionally
    accepts a monotone tail whose fitted limit is within ``tol``.
    """
    v = np.abs(np.asarray(values, dtype=float).reshape(-1))
    if v.size == 0:
        return TrendReport(0.0, None, True, "empty", True)
    final = float(v[-1])
    tail = v[len(v) - math.ceil(len(v) / 2) :] if len(v) > 1 else v
    scale = float(np.max(tail)) if tail.size else 0.0
    monotone = bool(np.all(np.diff(tail) <= 1e-9 * max(scale, 1e-300)))
    if not math.isfinite(final):
        return TrendReport(final, None, monotone, "final", False)
    if final <= tol:
        return TrendReport(final, None, monotone, "final", True)
    if mode != "extrapolate":
        return TrendReport(final, None, monotone, "final", False)
    start = len(v) - len(tail) + 1
    if len(tail) < MIN_TAIL or not monotone:
        return TrendReport(final, None, monotone, "extrapolate", False)
    k = np.arange(start, start + len(tail), dtype=float)
    L, rms = estimate_limit(k, tail)
    spread = float(tail[0] - tail[-1])
    good_fit = rms <= 0.05 * spread + 1e-3 * tol or spread == 0.0
    passed = good_fit and L <= tol
    return TrendReport(final, L, monotone, "extrapolate", bool(passed))


def vanishing_vectors(vectors, tol: float, mode: str = "extrapolate") -> TrendReport:
    """Gate on the norms, falling back to every coordinate at ``tol / sqrt(d)``."""
    V = np.asarray(vectors, dtype=float)
    V = V.reshape(V.shape[0], -1) if V.size else V.reshape(0, 1)
    rep = vanishing(np.linalg.norm(V, axis=1), tol, mode)
    d = V.shape[1]
    if rep.passed or mode != "extrapolate" or d < 2 or not math.isfinite(rep.final):
        return rep
    parts = [vanishing(V[:, i], tol / math.sqrt(d), mode) for i in range(d)]
    if not all(r.passed for r in parts):
        return rep
    lim = math.sqrt(sum((r.final if r.limit_estimate is None else max(r.limit_estimate, 0.0)) ** 2 for r in parts))
    return TrendReport(rep.final, lim, rep.monotone_tail, "componentwise", True)


def liminf_nonnegative(values, tol: float) -> tuple[bool, float]:
    """Minimum over the last ceil(K/2) terms must be at least ``-tol``."""
    v = np.asarray(values, dtype=float).reshape(-1)
    if v.size == 0:
        return True, 0.0
    tail = v[len(v) - math.ceil(len(v) / 2) :]
    m = float(np.min(tail))
    return m >= -tol, m
