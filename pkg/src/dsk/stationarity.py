"""Exact stationarity: verification and multiplier search."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .cones import FR, NN, NP, Z, SignCone, limiting_normal_cone, regular_normal_cone
from .config import DEFAULT, Tolerances
from .errors import DimensionError
from .geometry import require_member
from .linalg import rank_independent, solve_in_cone
from .problem import DisjunctiveProblem, MpccProblem, mpcc_index_sets


@dataclass
class StationarityCertificate:
    concept: str
    lam: np.ndarray
    residual: float
    cone_verdict: bool
    tol_res: float = DEFAULT.res
    branch: int | None = None
    cone: str | None = None

    @property
    def valid(self) -> bool:
        return self.residual <= self.tol_res and self.cone_verdict

    def to_json(self):
        return {
            "concept": self.concept,
            "lambda": self.lam.tolist(),
            "residual": self.residual,
            "cone_verdict": self.cone_verdict,
            "valid": self.valid,
            "branch": self.branch,
            "cone": self.cone,
        }


@dataclass
class SearchResult:
    concept: str
    certificate: StationarityCertificate | None
    infeasible_branches: list = field(default_factory=list)

    @property
    def found(self) -> bool:
        return self.certificate is not None

    def to_json(self):
        return {
            "concept": self.concept,
            "found": self.found,
            "certificate": self.certificate.to_json() if self.certificate else None,
            "infeasible_branches": list(self.infeasible_branches),
        }


def _cones_for(p: DisjunctiveProblem, y, concept: str, tol: Tolerances):
    if concept == "S":
        return [regular_normal_cone(p.gamma, y, tol.act)]
    if concept == "M":
        return list(limiting_normal_cone(p.gamma, y, tol.act).cones)
    raise ValueError(f"concept must be 'M' or 'S', got {concept!r}")


def verify_certificate(p: DisjunctiveProblem, xbar, lam, concept: str, tol: Tolerances = DEFAULT):
    xbar = np.asarray(xbar, dtype=float)
    lam = np.asarray(lam, dtype=float).reshape(-1)
    if lam.shape[0] != p.ell:
        raise DimensionError(f"multiplier must have length {p.ell}")
    y = p.F(xbar)
    require_member(p.gamma, y, tol.act)
    residual = float(np.linalg.norm(p.lagrangian_gradient(xbar, lam)))
    cones = _cones_for(p, y, concept, tol)
    hit = next((b for b, c in enumerate(cones) if c.contains(lam, tol.cone)), None)
    return StationarityCertificate(
        concept,
        lam,
        residual,
        hit is not None,
        tol.res,
        branch=hit,
        cone=str(cones[hit]) if hit is not None else None,
    )


def search_multiplier(p: DisjunctiveProblem, xbar, concept: str, tol: Tolerances = DEFAULT) -> SearchResult:
    """Search a multiplier making ``xbar`` M- or S-stationary.

    Branches are tried in the order of the cone list; the first feasible one
    wins.  A negative answer lists every branch that was found infeasible.
    """
    xbar = np.asarray(xbar, dtype=float)
    y = p.F(xbar)
    require_member(p.gamma, y, tol.act)
    A = p.jacobian(xbar).T
    b = -p.grad_f(xbar)
    cones = _cones_for(p, y, concept, tol)
    failed = []
    for k, cone in enumerate(cones):
        lam = solve_in_cone(A, b, cone, tol.lp)
        if lam is not None:
            cert = verify_certificate(p, xbar, lam, concept, tol)
            if cert.valid:
                cert.branch = k
                cert.cone = str(cone)
                return SearchResult(concept, cert, failed)
        failed.append(str(cone))
    return SearchResult(concept, None, failed)


def licq_rows(p: DisjunctiveProblem, xbar, tol: Tolerances = DEFAULT):
    y = p.F(xbar)
    data = require_member(p.gamma, y, tol.act)
    idx = sorted(data.I_exists)
    return idx, p.jacobian(xbar)[idx]


def check_licq(p: DisjunctiveProblem, xbar, tol: Tolerances = DEFAULT) -> bool:
    _, rows = licq_rows(p, xbar, tol)
    return rank_independent(rows, tol.rank)


# ---------------------------------------------------------------- MPCC side

MPCC_CONCEPTS = ("W", "C", "M", "S")


def _c_ok(a, b, t):
    return (a >= -t and b >= -t) or (a <= t and b <= t)


def _m_ok(a, b, t):
    return min(a, b) >= -t or min(abs(a), abs(b)) <= t


def _s_ok(a, b, t):
    return min(a, b) >= -t


SIGN_RULES = {"C": _c_ok, "M": _m_ok, "S": _s_ok}


def require_mpcc_feasible(p: MpccProblem, xbar, tol: Tolerances = DEFAULT):
    return mpcc_index_sets(p, xbar, None, tol.act)


def mpcc_w_base(p: MpccProblem, xbar, lam, tol: Tolerances = DEFAULT):
    """Residual and the list of violated conditions of the weak system."""
    sets = require_mpcc_feasible(p, xbar, tol)
    lg, lh, lG, lH = p.split(lam)
    residual = float(np.linalg.norm(p.lagrangian_gradient(xbar, lam)))
    issues = []
    if residual > tol.res:
        issues.append(f"residual {residual:.3g}")
    for i in range(p.m):
        if lg[i] < -tol.cone:
            issues.append(f"lambda_g{i + 1} < 0")
        if i not in sets.Ig and abs(lg[i]) > tol.cone:
            issues.append(f"lambda_g{i + 1} nonzero on inactive constraint")
    for i in range(p.q):
        if i in sets.Iplus0 and abs(lG[i]) > tol.cone:
            issues.append(f"lambda_G{i + 1} nonzero where G{i + 1} > 0")
        if i in sets.I0plus and abs(lH[i]) > tol.cone:
            issues.append(f"lambda_H{i + 1} nonzero where H{i + 1} > 0")
    return residual, issues, sets


def classify_mpcc(p: MpccProblem, xbar, lam, tol: Tolerances = DEFAULT) -> frozenset:
    """Every concept among W, C, M, S that ``(xbar, lam)`` certifies."""
    _, issues, sets = mpcc_w_base(p, xbar, lam, tol)
    if issues:
        return frozenset()
    _, _, lG, lH = p.split(lam)
    out = {"W"}
    for c, rule in SIGN_RULES.items():
        if all(rule(lG[i], lH[i], tol.cone) for i in sets.I00):
            out.add(c)
    return frozenset(out)


def _mpcc_branches(p: MpccProblem, sets, concept: str):
    """Sign cones in block layout covering the concept's sign system."""
    base = [NN if i in sets.Ig else Z for i in range(p.m)] + [FR] * p.p
    G = [FR if i in sets.IG else Z for i in range(p.q)]
    H = [FR if i in sets.IH else Z for i in range(p.q)]
    I00 = sorted(sets.I00)
    if concept == "W" or not I00:
        yield SignCone(tuple(base + G + H))
        return
    options = {
        "S": [(NN, NN)],
        "C": [(NN, NN), (NP, NP)],
        "M": [(NN, NN), (Z, FR), (FR, Z)],
    }[concept]
    for combo in itertools.product(options, repeat=len(I00)):
        g2, h2 = list(G), list(H)
        for i, (a, b) in zip(I00, combo):
            g2[i], h2[i] = a, b
        yield SignCone(tuple(base + g2 + h2))


def search_mpcc_multiplier(p: MpccProblem, xbar, concept: str, tol: Tolerances = DEFAULT) -> SearchResult:
    if concept not in MPCC_CONCEPTS:
        raise ValueError(f"concept must be one of {MPCC_CONCEPTS}")
    xbar = np.asarray(xbar, dtype=float)
    sets = require_mpcc_feasible(p, xbar, tol)
    Jg, Jh, JG, JH = p.jacobians(xbar)
    A = np.vstack([Jg, Jh, -JG, -JH]).T
    b = -p.grad_f(xbar)
    failed = []
    for k, cone in enumerate(_mpcc_branches(p, sets, concept)):
        lam = solve_in_cone(A, b, cone, tol.lp)
        if lam is not None:
            residual = float(np.linalg.norm(p.lagrangian_gradient(xbar, lam)))
            if concept in classify_mpcc(p, xbar, lam, tol):
                cert = StationarityCertificate(concept, lam, residual, True, tol.res, k, str(cone))
                return SearchResult(concept, cert, failed)
        failed.append(str(cone))
    return SearchResult(concept, None, failed)
