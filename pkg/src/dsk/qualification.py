"""Qualification conditions tied to sequences, classical MFCQ variants and
falsification witnesses for the regularity notions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cones import FR, NN, Z, SignCone, limiting_normal_cone, regular_normal_cone
from .config import DEFAULT, Tolerances
from .errors import ConsistencyError, WitnessError
from .geometry import membership, require_member
from .linalg import nonzero_kernel_element, positively_linearly_independent, sign_preserving_reduction, solve_in_cone
from .problem import DisjunctiveProblem, MpccProblem, mpcc_index_sets
from .sequences import (
    SequenceTerm,
    to_regular_cone_sequence,
    verify_am_sequence,
    verify_as_sequence,
    verify_mpcc_sequence,
    verify_sas_sequence,
)
from .stationarity import search_mpcc_multiplier, search_multiplier
from .trend import vanishing, vanishing_vectors


@dataclass
class SubMfcReport:
    conclusion: str  # "holds", "fails" or "sequence-invalid"
    index_set: dict
    signs: dict
    pli: object
    verdict: object
    mode: str = "AM"
    generators: list = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return self.conclusion == "holds"

    def to_json(self):
        return {
            "conclusion": self.conclusion,
            "mode": self.mode,
            "index_set": {k: [i + 1 for i in sorted(v)] for k, v in self.index_set.items()},
            "signs": {k: list(v) for k, v in self.signs.items()},
            "generators": [np.asarray(g).tolist() for g in self.generators],
            "positively_independent": None if self.pli is None else bool(self.pli.independent),
            "witness": None if self.pli is None or self.pli.witness is None else self.pli.witness.tolist(),
            "sequence": self.verdict.to_json() if self.verdict is not None else None,
        }


def check_odp_submfc(p: DisjunctiveProblem, xbar, terms, tol: Tolerances = DEFAULT, mode: str = "AM"):
    """Subset MFC for one given sequence.

    ``mode="AS"`` first moves the perturbed points so that the multipliers are
    regular normals and then uses the (possibly smaller) index sets there.
    """
    xbar = np.asarray(xbar, dtype=float).reshape(-1)
    terms = list(terms)
    if mode == "AM":
        verdict = verify_am_sequence(p, xbar, terms, tol)
    elif mode == "AS":
        am = verify_am_sequence(p, xbar, terms, tol)
        if not am.passed:
            return SubMfcReport("sequence-invalid", {}, {}, None, am, mode)
        converted = to_regular_cone_sequence(p, xbar, terms, tol)
        verdict = verify_as_sequence(p, xbar, converted, tol)
    else:
        raise ValueError("mode must be 'AM' or 'AS'")
    if not verdict.passed:
        return SubMfcReport("sequence-invalid", {}, {}, None, verdict, mode)
    _, I_exists, signs = verdict.pattern
    I = sorted(I_exists)
    if not I:
        return SubMfcReport("holds", {"I": frozenset()}, {"lambda": signs}, None, verdict, mode)
    jac = p.jacobian(xbar)
    gens = [signs[i] * jac[i] for i in I]
    pli = positively_linearly_independent(gens, labels=I, tol=tol.lp)
    return SubMfcReport(
        "holds" if pli.independent else "fails",
        {"I": frozenset(I)},
        {"lambda": tuple(signs[i] for i in I)},
        pli,
        verdict,
        mode,
        gens,
    )


@dataclass
class Conclusion:
    level: str
    certificate: object
    note: str = ""

    def to_json(self):
        return {
            "stationarity": self.level,
            "certificate": self.certificate.to_json() if self.certificate is not None else None,
            "note": self.note,
        }


def conclude_from_submfc(report: SubMfcReport, p: DisjunctiveProblem, xbar, terms, tol: Tolerances = DEFAULT):
    """Stationarity implied by a satisfied subset MFC, confirmed by an exact search."""
    if not report.holds:
        raise ValueError("the qualification condition does not hold for this sequence")
    level = "M"
    sas_terms = [SequenceTerm(t.x, t.lam, t.eps) for t in terms]
    if verify_sas_sequence(p, xbar, sas_terms, tol).passed:
        level = "S"
    found = search_multiplier(p, xbar, level, tol)
    if not found.found:
        raise ConsistencyError(
            f"{level}-stationarity follows from the sequence, but no multiplier was found; "
            f"infeasible branches: {found.infeasible_branches}"
        )
    note = "empty index set: the zero multiplier already works" if not report.index_set.get("I") else ""
    return Conclusion(level, found.certificate, note)


def check_mpcc_submfc(p: MpccProblem, xbar, terms, tol: Tolerances = DEFAULT):
    xbar = np.asarray(xbar, dtype=float).reshape(-1)
    terms = list(terms)
    verdict = verify_mpcc_sequence(p, xbar, terms, "AW", tol)
    if not verdict.passed:
        return SubMfcReport("sequence-invalid", {}, {}, None, verdict, "AW")
    I1, I2, I3, signs = verdict.pattern
    m, pp, q = p.m, p.p, p.q
    sh = signs[m : m + pp]
    sG = signs[m + pp : m + pp + q]
    sH = signs[m + pp + q :]
    Jg, Jh, JG, JH = p.jacobians(xbar)
    gens, labels = [], []
    for i in sorted(I1):
        gens.append(Jg[i])
        labels.append(f"g{i + 1}")
    for i in range(pp):
        gens.append(sh[i] * Jh[i])
        labels.append(f"h{i + 1}")
    for i in sorted(I2):
        gens.append(-sG[i] * JG[i])
        labels.append(f"G{i + 1}")
    for i in sorted(I3):
        gens.append(-sH[i] * JH[i])
        labels.append(f"H{i + 1}")
    sets = {"I1": I1, "I2": I2, "I3": I3}
    sgn = {"h": sh, "G": tuple(sG[i] for i in sorted(I2)), "H": tuple(sH[i] for i in sorted(I3))}
    if not gens:
        return SubMfcReport("holds", sets, sgn, None, verdict, "AW")
    pli = positively_linearly_independent(gens, labels=labels, tol=tol.lp)
    return SubMfcReport("holds" if pli.independent else "fails", sets, sgn, pli, verdict, "AW", gens)


_LEVEL = {"AW": "W", "AC": "C", "AM": "M", "SAS": "S"}


def conclude_from_mpcc_submfc(
    report: SubMfcReport, p: MpccProblem, xbar, terms, concept: str, tol: Tolerances = DEFAULT, relaxed: bool = False
):
    """Map a satisfied MPCC subset MFC plus a concept-level sequence to W/C/M/S.

    With ``relaxed`` the C and M sign rules are only imposed on pairs that stay
    biactive along the sequence.
    """
    if not report.holds:
        raise ValueError("the qualification condition does not hold for this sequence")
    verdict = verify_mpcc_sequence(p, xbar, terms, concept, tol, relaxed=relaxed)
    if not verdict.passed:
        raise ValueError(f"the sequence does not pass at level {concept}: {verdict.reasons}")
    level = _LEVEL[concept]
    found = search_mpcc_multiplier(p, xbar, level, tol)
    if not found.found:
        raise ConsistencyError(f"{level}-stationarity follows from the sequence, but no multiplier was found")
    return Conclusion(level, found.certificate)


# ------------------------------------------------------ classical conditions


def check_mpcc_mfcq(p: MpccProblem, xbar, tol: Tolerances = DEFAULT):
    """MPCC-MFCQ: no nonzero (u, v, r, s) with u >= 0 on active g combines to zero.

    Returns ``(holds, witness)``; the witness is a violating multiplier in block
    layout.  Free multipliers are handled by fixing one nonzero coordinate to
    +-1 instead of splitting generators into +- pairs.
    """
    sets = mpcc_index_sets(p, xbar, None, tol.act)
    Jg, Jh, JG, JH = p.jacobians(xbar)
    A = np.vstack([Jg, Jh, -JG, -JH]).T
    cone = SignCone(
        tuple(
            [NN if i in sets.Ig else Z for i in range(p.m)]
            + [FR] * p.p
            + [FR if i in sets.IG else Z for i in range(p.q)]
            + [FR if i in sets.IH else Z for i in range(p.q)]
        )
    )
    lam = nonzero_kernel_element(A, cone, tol.lp)
    return lam is None, lam


def check_generalized_mfcq(p: DisjunctiveProblem, xbar, tol: Tolerances = DEFAULT):
    """No nonzero limiting normal at F(xbar) lies in the kernel of F'(xbar)^T.

    Returns ``(holds, witness, branch)``.
    """
    y = p.F(xbar)
    require_member(p.gamma, y, tol.act)
    A = p.jacobian(xbar).T
    for b, cone in enumerate(limiting_normal_cone(p.gamma, y, tol.act)):
        lam = nonzero_kernel_element(A, cone, tol.lp)
        if lam is not None:
            return False, lam, b
    return True, None, None


# ------------------------------------------------------- regularity witnesses


@dataclass
class WitnessReport:
    kind: str
    falsified: bool
    xi_limit: np.ndarray
    reasons: list

    def to_json(self):
        return {
            "kind": self.kind,
            "falsified": self.falsified,
            "xi_limit": self.xi_limit.tolist(),
            "reasons": list(self.reasons),
        }


def regularity_witness(p: DisjunctiveProblem, xbar, witness, kind: str = "AM", tol: Tolerances = DEFAULT):
    """Try to refute AM- or AS-regularity with a concrete sequence.

    ``witness`` holds dicts with ``x`` and either ``lambda`` or ``xi``; the AM
    kind also needs ``delta``.  The limit of xi^k is estimated by the final
    term and must be separated from the image of the normal cone at xbar.
    """
    if kind not in ("AM", "AS"):
        raise ValueError("kind must be 'AM' or 'AS'")
    xbar = np.asarray(xbar, dtype=float).reshape(-1)
    ybar = p.F(xbar)
    require_member(p.gamma, ybar, tol.act)
    xis, xdist, ddist = [], [], []
    fixed = regular_normal_cone(p.gamma, ybar, tol.act) if kind == "AS" else None
    for k, w in enumerate(witness, start=1):
        x = np.asarray(w["x"], dtype=float)
        Jt = p.jacobian(x).T
        if kind == "AM":
            delta = np.asarray(w["delta"], dtype=float)
            z = p.F(x) - delta
            if membership(p.gamma, z, tol.act) is None:
                raise WitnessError(f"term {k}: F(x) - delta is not in the set")
            cones = list(limiting_normal_cone(p.gamma, z, tol.act))
            ddist.append(delta)
        else:
            cones = [fixed]
        lam = w.get("lambda")
        if lam is not None:
            lam = np.asarray(lam, dtype=float)
            if not any(c.contains(lam, tol.cone) for c in cones):
                raise WitnessError(f"term {k}: multiplier is not in the required cone")
            xi = Jt @ lam
            if "xi" in w and np.linalg.norm(xi - np.asarray(w["xi"], dtype=float)) > tol.res:
                raise WitnessError(f"term {k}: xi does not match F'(x)^T lambda")
        else:
            xi = np.asarray(w["xi"], dtype=float)
            if not any(solve_in_cone(Jt, xi, c, tol.lp) is not None for c in cones):
                raise WitnessError(f"term {k}: xi is not in the image of the cone")
        xis.append(xi)
        xdist.append(x - xbar)
    reasons = []
    for name, series in (("x - xbar", xdist), ("delta", ddist)):
        if series:
            rep = vanishing_vectors(series, tol.seq)
            if not rep.passed:
                reasons.append(f"{name} does not vanish")
    xi_lim = xis[-1]
    spread = vanishing([np.linalg.norm(v - xi_lim) for v in xis[:-1]] or [0.0], tol.seq)
    if not spread.passed:
        reasons.append("xi does not settle")
    if reasons:
        raise WitnessError("; ".join(reasons))
    At = p.jacobian(xbar).T
    targets = [fixed] if kind == "AS" else list(limiting_normal_cone(p.gamma, ybar, tol.act))
    inside = any(solve_in_cone(At, xi_lim, c, tol.lp) is not None for c in targets)
    notes = [] if not inside else ["limit lies in the image of the normal cone"]
    return WitnessReport(kind, not inside, xi_lim, notes)


# --------------------------------------------------- constructive sequences


def constructive_submfc_sequence(p: DisjunctiveProblem, xbar, lam, K: int = 30, tol: Tolerances = DEFAULT):
    """Sequence making the subset MFC hold at an M-stationary point.

    Requires a single active component with nonempty interior.  The multiplier
    is reduced to a linearly independent support with unchanged signs; bounds
    of active coordinates outside that support are released by perturbations
    of size eta_i / k with k = 2**0, ..., 2**(K-1).
    """
    xbar = np.asarray(xbar, dtype=float).reshape(-1)
    y = p.F(xbar)
    data = require_member(p.gamma, y, tol.act)
    if len(data.J) != 1:
        raise ValueError("exactly one active component is required")
    (j0,) = data.J
    box = p.gamma.components[j0]
    if not box.has_interior():
        raise ValueError("the active component must have nonempty interior")
    lam = np.asarray(lam, dtype=float)
    jac = p.jacobian(xbar)
    c = sign_preserving_reduction(jac, lam, tol.rank)
    support = {i for i in range(p.ell) if c[i] != 0.0}
    shift = np.zeros(p.ell)
    for i in data.I_exists - support:
        iv = box.intervals[i]
        width = iv.upper.value - iv.lower.value if iv.lower.is_finite and iv.upper.is_finite else math.inf
        eta = min(1.0, width) / 2
        shift[i] = eta if iv.at_lower(y[i], tol.act) else -eta
    eps = p.lagrangian_gradient(xbar, c)
    terms = []
    for e in range(K):
        k = 2.0**e
        delta = -shift / k
        terms.append(SequenceTerm(xbar.copy(), c.copy(), eps.copy(), delta))
    return terms
