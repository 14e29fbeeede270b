"""Dense rank tests and a phase-1 simplex for small feasibility problems."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .cones import FR, NN, NP, Z, SignCone
from .config import DEFAULT

RANK_TOL = DEFAULT.rank


def _matrix(vectors) -> np.ndarray:
    rows = [np.asarray(v, dtype=float).reshape(-1) for v in vectors]
    if not rows:
        return np.zeros((0, 0))
    return np.vstack(rows)


def numerical_rank(a, rel_tol: float = RANK_TOL) -> int:
    """Rank by Gaussian elimination with complete pivoting.

    Pivots below ``rel_tol * max|a_ij|`` count as zero.
    """
    a = np.array(a, dtype=float, copy=True)
    if a.size == 0:
        return 0
    scale = np.max(np.abs(a))
    if scale == 0.0:
        return 0
    thresh = rel_tol * scale
    rank = 0
    rows, cols = a.shape
    for r in range(min(rows, cols)):
        sub = np.abs(a[r:, r:])
        i, j = np.unravel_index(np.argmax(sub), sub.shape)
        if sub[i, j] <= thresh:
            break
        i += r
        j += r
        a[[r, i]] = a[[i, r]]
        a[:, [r, j]] = a[:, [j, r]]
        piv = a[r, r]
        factors = a[r + 1 :, r] / piv
        a[r + 1 :, r:] -= np.outer(factors, a[r, r:])
        rank += 1
    return rank


def rank_independent(vectors, rel_tol: float = RANK_TOL) -> bool:
    """True iff the vectors are linearly independent (an empty family is)."""
    a = _matrix(vectors)
    if a.shape[0] == 0:
        return True
    return numerical_rank(a, rel_tol) == a.shape[0]


@dataclass
class Phase1Result:
    feasible: bool
    z: np.ndarray
    infeasibility: float
    iterations: int


def phase_one(A, b, tol: float = DEFAULT.lp, max_iter: int = 10_000) -> Phase1Result:
    """Find z >= 0 with A z = b, or report that none exists.

    Textbook tableau phase 1 with one artificial variable per row and Bland's
    smallest-index rule for both entering and leaving variables.
    """
    A = np.array(A, dtype=float, copy=True)
    b = np.array(b, dtype=float, copy=True).reshape(-1)
    m, n = A.shape
    if m == 0:
        return Phase1Result(True, np.zeros(n), 0.0, 0)
    neg = b < 0
    A[neg] *= -1
    b[neg] *= -1
    scale = max(1.0, float(np.max(np.abs(A))) if A.size else 1.0, float(np.max(np.abs(b))))
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n : n + m] = np.eye(m)
    T[:m, -1] = b
    T[m, :] = -T[:m, :].sum(axis=0)
    T[m, n : n + m] = 0.0
    basis = list(range(n, n + m))
    piv_tol = 1e-12 * scale
    it = 0
    while True:
        it += 1
        if it > max_iter:
            raise RuntimeError("phase-1 simplex exceeded its iteration limit")
        reduced = T[m, : n + m]
        entering = next((j for j in range(n + m) if reduced[j] < -piv_tol), None)
        if entering is None:
            break
        col = T[:m, entering]
        best, leave = None, None
        for i in range(m):
            if col[i] > piv_tol:
                ratio = T[i, -1] / col[i]
                if (
                    best is None
                    or ratio < best - piv_tol
                    or (abs(ratio - best) <= piv_tol and basis[i] < basis[leave])
                ):
                    best, leave = ratio, i
        if leave is None:
            # unbounded direction cannot occur in phase 1 (objective is bounded below)
            break
        T[leave] /= T[leave, entering]
        for i in range(m + 1):
            if i != leave and T[i, entering] != 0.0:
                T[i] -= T[i, entering] * T[leave]
        basis[leave] = entering
    z = np.zeros(n + m)
    for i, j in enumerate(basis):
        z[j] = max(T[i, -1], 0.0)
    infeas = float(np.sum(z[n:]))
    x = z[:n]
    resid = float(np.max(np.abs(A @ x - b))) if m else 0.0
    feasible = infeas <= tol * max(1.0, float(np.max(np.abs(b)))) and resid <= 10 * tol * scale
    return Phase1Result(feasible, x, infeas, it)


@dataclass
class PliResult:
    independent: bool
    witness: np.ndarray | None = None
    labels: tuple | None = None

    def __bool__(self):
        return self.independent


def positively_linearly_independent(generators, labels=None, tol: float = DEFAULT.lp) -> PliResult:
    """Decide whether no convex combination of the generators vanishes.

    When the family is positively dependent the returned witness ``u`` satisfies
    ``u >= 0``, ``sum(u) = 1`` and ``sum(u_i v_i) = 0``.
    """
    V = _matrix(generators)
    r = V.shape[0]
    if r == 0:
        return PliResult(True, None, tuple(labels or ()))
    n = V.shape[1]
    A = np.vstack([V.T, np.ones((1, r))])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    res = phase_one(A, b, tol)
    lab = tuple(labels) if labels is not None else None
    if not res.feasible:
        return PliResult(True, None, lab)
    u = res.z / res.z.sum()
    return PliResult(False, u, lab)


def _columns_for_cone(cone: SignCone):
    """Split a sign-constrained vector into nonnegative LP variables.

    Returns a list of ``(coordinate, sign)`` pairs; the coordinate equals the
    signed sum of its variables.
    """
    cols = []
    for i, c in enumerate(cone.constraints):
        if c is NN:
            cols.append((i, 1.0))
        elif c is NP:
            cols.append((i, -1.0))
        elif c is FR:
            cols.append((i, 1.0))
            cols.append((i, -1.0))
    return cols


def solve_in_cone(A, b, cone: SignCone, tol: float = DEFAULT.lp):
    """Find lam in ``cone`` with A lam = b; returns the vector or ``None``."""
    A = np.asarray(A, dtype=float)
    cols = _columns_for_cone(cone)
    ell = cone.dim
    if not cols:
        lam = np.zeros(ell)
        return lam if np.max(np.abs(np.asarray(b, dtype=float)), initial=0.0) <= tol else None
    M = np.column_stack([A[:, i] * s for i, s in cols])
    res = phase_one(M, b, tol)
    if not res.feasible:
        return None
    lam = np.zeros(ell)
    for (i, s), v in zip(cols, res.z):
        lam[i] += s * v
    return lam


def nonzero_kernel_element(A, cone: SignCone, tol: float = DEFAULT.lp):
    """Find lam != 0 in ``cone`` with A lam = 0, or ``None``.

    A nonzero lam has some coordinate i with a definite sign; scaling makes that
    coordinate equal to +1 or -1, which turns the search into at most two
    linear feasibility problems per coordinate.
    """
    A = np.asarray(A, dtype=float)
    rows = A.shape[0]
    for i, c in enumerate(cone.constraints):
        if c is Z:
            continue
        signs = {NN: (1.0,), NP: (-1.0,), FR: (1.0, -1.0)}[c]
        for s in signs:
            A_ext = np.vstack([A, np.eye(cone.dim)[i]])
            b_ext = np.zeros(rows + 1)
            b_ext[-1] = s
            lam = solve_in_cone(A_ext, b_ext, cone, tol)
            if lam is not None:
                return lam
    return None


def sign_preserving_reduction(vectors, coeffs, rel_tol: float = RANK_TOL):
    """Carathéodory-type reduction of a representation ``sum c_i v_i``.

    Returns new coefficients with the same sum, ``c_new_i * c_i >= 0`` and
    ``c_new_i = 0`` outside a subset whose vectors are linearly independent.
    """
    V = _matrix(vectors)
    c = np.array(coeffs, dtype=float)
    c[np.abs(c) <= 0.0] = 0.0
    while True:
        S = [i for i in range(len(c)) if c[i] != 0.0]
        if not S or rank_independent(V[S], rel_tol):
            return c
        # null vector of V_S^T
        sub = V[S].T
        _, sv, vh = np.linalg.svd(sub, full_matrices=True)
        alpha = vh[-1].copy()
        alpha[np.abs(alpha) <= 1e-12 * np.max(np.abs(alpha))] = 0.0
        if not np.any(alpha * c[S] > 0):
            alpha = -alpha
        t, hit = np.inf, None
        for a, i in zip(alpha, S):
            if a * c[i] > 0 and c[i] / a < t:
                t, hit = c[i] / a, i
        old = c.copy()
        for a, i in zip(alpha, S):
            c[i] -= t * a
            if c[i] * old[i] < 0:
                c[i] = 0.0
        c[hit] = 0.0
