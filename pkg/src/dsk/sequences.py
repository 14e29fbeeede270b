"""Verification of finite approximate-stationarity sequences.

Per-term algebraic conditions are checked within tolerance; convergence to
the reference point is judged by :mod:`dsk.trend`.  Terms are grouped by their
activity and sign pattern, and the largest group is verified.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cones import limiting_normal_cone, regular_normal_cone, pattern_cones
from .config import DEFAULT, Tolerances
from .errors import DimensionError
from .geometry import membership, minimal_gap, require_member
from .problem import DisjunctiveProblem, MpccProblem, mpcc_index_sets
from .stationarity import SIGN_RULES
from .trend import liminf_nonnegative, vanishing, vanishing_vectors


@dataclass
class SequenceTerm:
    x: np.ndarray
    lam: np.ndarray
    eps: np.ndarray
    delta: np.ndarray | None = None

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float).reshape(-1)
        self.lam = np.asarray(self.lam, dtype=float).reshape(-1)
        self.eps = np.asarray(self.eps, dtype=float).reshape(-1)
        if self.delta is not None:
            self.delta = np.asarray(self.delta, dtype=float).reshape(-1)

    @staticmethod
    def from_json(d, problem=None) -> "SequenceTerm":
        """Build a term from a mapping; a missing ``eps`` is computed from ``problem``."""
        lam = d.get("lambda", d.get("lam"))
        if lam is None or "x" not in d:
            raise ValueError("a sequence term needs 'x' and 'lambda'")
        eps = d.get("eps")
        if eps is None:
            if problem is None:
                raise ValueError("a term without 'eps' needs the problem to compute it")
            eps = problem.lagrangian_gradient(d["x"], lam)
        return SequenceTerm(d["x"], lam, eps, d.get("delta"))

    def to_json(self):
        out = {"x": self.x.tolist(), "lambda": self.lam.tolist()}
        if self.delta is not None:
            out["delta"] = self.delta.tolist()
        out["eps"] = self.eps.tolist()
        return out


@dataclass
class TermCheck:
    index: int
    residual: float
    flags: dict
    pattern: tuple

    @property
    def ok(self) -> bool:
        return all(self.flags.values())

    def to_json(self):
        return {
            "index": self.index,
            "residual": self.residual,
            "flags": dict(self.flags),
            "ok": self.ok,
            "pattern": _pattern_json(self.pattern),
        }


def _pattern_json(pattern):
    return [sorted(int(i) + 1 for i in p) if isinstance(p, frozenset) else list(p) if isinstance(p, tuple) else p for p in pattern]


@dataclass
class SequenceVerdict:
    concept: str
    terms: list
    group: list
    discarded: list
    pattern: tuple | None
    trends: dict
    info: dict = field(default_factory=dict)
    reasons: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.reasons

    def group_terms(self):
        return [self.terms[i] for i in self.group]

    def to_json(self):
        return {
            "concept": self.concept,
            "passed": self.passed,
            "reasons": list(self.reasons),
            "group": [i + 1 for i in self.group],
            "discarded": [i + 1 for i in self.discarded],
            "pattern": _pattern_json(self.pattern) if self.pattern is not None else None,
            "trends": {k: v.to_json() for k, v in self.trends.items()},
            "info": self.info,
            "terms": [t.to_json() for t in self.terms],
        }


def _signs(lam, tol):
    return tuple(0 if abs(v) <= tol else (1 if v > 0 else -1) for v in lam)


def _group(checks):
    order, groups = [], {}
    for c in checks:
        if c.pattern not in groups:
            groups[c.pattern] = []
            order.append(c.pattern)
        groups[c.pattern].append(c.index)
    best = max(order, key=lambda pat: (len(groups[pat]), -order.index(pat)))
    chosen = groups[best]
    discarded = [c.index for c in checks if c.index not in set(chosen)]
    return best, chosen, discarded


def _finish(concept, checks, series, tol, trend_mode, info=None):
    if not checks:
        raise ValueError("at least one term is required")
    pattern, group, discarded = _group(checks)
    reasons = []
    bad = [i for i in group if not checks[i].ok]
    if bad:
        failing = sorted({k for i in bad for k, v in checks[i].flags.items() if not v})
        reasons.append(f"{len(bad)} term(s) violate: {', '.join(failing)}")
    trends = {}
    for name, values in series.items():
        vals = [values[i] for i in group]
        if vals and np.ndim(vals[0]):
            rep = vanishing_vectors(vals, tol.seq, trend_mode)
        else:
            rep = vanishing(vals, tol.seq, trend_mode)
        trends[name] = rep
        if not rep.passed:
            reasons.append(f"{name} does not vanish (final {rep.final:.3g})")
    return SequenceVerdict(concept, checks, group, discarded, pattern, trends, info or {}, reasons)


def _check_dims(p, terms, need_delta):
    if not terms:
        raise DimensionError("a sequence needs at least one term")
    for k, t in enumerate(terms):
        if t.x.shape[0] != p.n or t.eps.shape[0] != p.n or t.lam.shape[0] != p.ell:
            raise DimensionError(f"term {k + 1} has inconsistent dimensions")
        if need_delta and (t.delta is None or t.delta.shape[0] != p.ell):
            raise DimensionError(f"term {k + 1} needs a perturbation vector of length {p.ell}")


CONE_MODES = ("limiting", "regular", "fixed-limiting", "fixed-regular")


def verify_disjunctive_sequence(
    p: DisjunctiveProblem,
    xbar,
    terms,
    cone: str = "limiting",
    tol: Tolerances = DEFAULT,
    trend_mode: str = "extrapolate",
):
    """Shared verifier for the disjunctive sequence notions.

    ``cone`` selects where the multiplier must lie: the limiting or regular cone
    at the perturbed point F(x^k) - delta^k, or the fixed limiting/regular cone
    at F(xbar) (no perturbation needed).
    """
    if cone not in CONE_MODES:
        raise ValueError(f"cone must be one of {CONE_MODES}")
    xbar = np.asarray(xbar, dtype=float).reshape(-1)
    terms = list(terms)
    fixed = cone.startswith("fixed")
    _check_dims(p, terms, need_delta=not fixed)
    ybar = p.F(xbar)
    require_member(p.gamma, ybar, tol.act)
    if fixed:
        base = regular_normal_cone(p.gamma, ybar, tol.act) if cone == "fixed-regular" else limiting_normal_cone(p.gamma, ybar, tol.act)
    checks = []
    series = {"x - xbar": [], "eps": []}
    if not fixed:
        series["delta"] = []
    lam_delta, lam_norm = [], []
    for k, t in enumerate(terms):
        Fx = p.F(t.x)
        residual = float(np.linalg.norm(t.eps - p.lagrangian_gradient(t.x, t.lam)))
        flags = {"residual": residual <= tol.res}
        if fixed:
            c = base
            flags["cone"] = c.contains(t.lam, tol.cone)
            pattern = ("fixed", _signs(t.lam, tol.cone))
        else:
            z = Fx - t.delta
            data = membership(p.gamma, z, tol.act)
            flags["member"] = data is not None
            if data is None:
                flags["cone"] = False
                pattern = ("not a member",)
            else:
                c = regular_normal_cone(p.gamma, z, tol.act) if cone == "regular" else limiting_normal_cone(p.gamma, z, tol.act)
                flags["cone"] = c.contains(t.lam, tol.cone)
                pattern = (data.J, data.I_exists, _signs(t.lam, tol.cone))
            lam_delta.append(float(abs(t.lam @ t.delta)))
        lam_norm.append(float(np.linalg.norm(t.lam)))
        checks.append(TermCheck(k, residual, flags, pattern))
        series["x - xbar"].append(t.x - xbar)
        series["eps"].append(t.eps)
        if not fixed:
            series["delta"].append(t.delta)
    info = {"lambda_norm_final": lam_norm[-1], "lambda_norm_max": max(lam_norm)}
    if lam_delta:
        rep = vanishing(lam_delta, tol.seq)
        info["lambda_dot_delta"] = rep.to_json()
    concept = {"limiting": "AM", "regular": "AS", "fixed-limiting": "AM(fixed cone)", "fixed-regular": "SAS"}[cone]
    return _finish(concept, checks, series, tol, trend_mode, info)


def verify_am_sequence(p, xbar, terms, tol: Tolerances = DEFAULT, trend_mode: str = "extrapolate"):
    return verify_disjunctive_sequence(p, xbar, terms, "limiting", tol, trend_mode)


def verify_as_sequence(p, xbar, terms, tol: Tolerances = DEFAULT, trend_mode: str = "extrapolate"):
    """Approximately S-stationary: multipliers in the regular cone at F(x^k)-delta^k."""
    return verify_disjunctive_sequence(p, xbar, terms, "regular", tol, trend_mode)


def verify_sas_sequence(p, xbar, terms, tol: Tolerances = DEFAULT, trend_mode: str = "extrapolate"):
    return verify_disjunctive_sequence(p, xbar, terms, "fixed-regular", tol, trend_mode)


# ------------------------------------------------------------- conversions


def sas_to_as(p: DisjunctiveProblem, xbar, terms):
    """Attach delta^k = F(x^k) - F(xbar) so that F(x^k) - delta^k = F(xbar)."""
    ybar = p.F(xbar)
    return [SequenceTerm(t.x, t.lam, t.eps, p.F(t.x) - ybar) for t in terms]


def to_regular_cone_sequence(p: DisjunctiveProblem, xbar, terms, tol: Tolerances = DEFAULT, fixed: bool = False):
    """Move each perturbed point so that its multiplier becomes a regular normal.

    For a multiplier in the limiting cone at z = F(x^k) - delta^k (or at F(xbar)
    when ``fixed``) a perturbation pattern s with the multiplier in the regular
    cone at z + t*s exists; the new point uses a step t below the minimal gap
    and shrinking like 1/k.  Multipliers, iterates and residuals are kept.
    """
    ybar = p.F(xbar) if fixed else None
    out = []
    for k, t in enumerate(terms, start=1):
        Fx = p.F(t.x)
        z = ybar if fixed else Fx - t.delta
        pats = pattern_cones(p.gamma, z, tol.act)
        hit = next((s for s, _, c in pats if c.contains(t.lam, tol.cone)), None)
        if hit is None:
            raise ValueError(f"term {k}: multiplier is not a limiting normal")
        s = np.asarray(hit, dtype=float)
        gap = minimal_gap(p.gamma, z, tol.act)
        step = min(1.0, gap / 2 if math.isfinite(gap) else 1.0) / k
        y = z + step * s
        out.append(SequenceTerm(t.x, t.lam, t.eps, Fx - y))
    return out


# ------------------------------------------------------------------- MPCC


MPCC_SEQ_CONCEPTS = ("AW", "AC", "AM", "SAS")


def _perturbed_sets(p: MpccProblem, x, delta, tol):
    try:
        return mpcc_index_sets(p, x, delta, tol)
    except ValueError:
        return None


def verify_mpcc_sequence(
    p: MpccProblem,
    xbar,
    terms,
    concept: str = "AW",
    tol: Tolerances = DEFAULT,
    trend_mode: str = "extrapolate",
    relaxed: bool = False,
):
    """Verify an approximately W/C/M/S-stationary sequence blockwise.

    ``relaxed`` imposes the C and M sign rules only on biactive indices that
    stay biactive at the perturbed points.
    """
    if concept not in MPCC_SEQ_CONCEPTS:
        raise ValueError(f"concept must be one of {MPCC_SEQ_CONCEPTS}")
    xbar = np.asarray(xbar, dtype=float).reshape(-1)
    terms = list(terms)
    _check_dims(p, terms, need_delta=True)
    bar = mpcc_index_sets(p, xbar, None, tol.act)
    rule = SIGN_RULES.get(concept[-1]) if concept != "AW" else None
    t_act, t_c = tol.act, tol.cone
    checks = []
    series = {"x - xbar": [], "delta": [], "eps": []}
    lam_delta = []
    for k, t in enumerate(terms):
        vg, vh, vG, vH = p.values(t.x)
        dg, dh, dG, dH = p.split(t.delta)
        lg, lh, lG, lH = p.split(t.lam)
        residual = float(np.linalg.norm(t.eps - p.lagrangian_gradient(t.x, t.lam)))
        sg, sG, sH = vg - dg, vG + dG, vH + dH
        flags = {
            "residual": residual <= tol.res,
            "lambda_g >= 0": bool(np.all(lg >= -t_c)),
            "g <= delta_g": bool(np.all(sg <= t_act)),
            "g complementarity": all(abs(sg[i]) <= t_act or abs(lg[i]) <= t_c for i in range(p.m)),
            "h = delta_h": bool(np.all(np.abs(vh - dh) <= t_act)),
            "G >= -delta_G": bool(np.all(sG >= -t_act)),
            "H >= -delta_H": bool(np.all(sH >= -t_act)),
            "G complementarity": all(abs(sG[i]) <= t_act or abs(lG[i]) <= t_c for i in range(p.q)),
            "H complementarity": all(abs(sH[i]) <= t_act or abs(lH[i]) <= t_c for i in range(p.q)),
            "G perp H": all(min(abs(sG[i]), abs(sH[i])) <= t_act for i in range(p.q)),
        }
        sets = _perturbed_sets(p, t.x, t.delta, t_act)
        if rule is not None:
            idx = bar.I00
            if relaxed and sets is not None:
                idx = idx & sets.IG & sets.IH
            flags[f"{concept} signs"] = all(rule(lG[i], lH[i], t_c) for i in idx)
        if sets is None:
            pattern = ("infeasible",)
        else:
            pattern = (sets.Ig, sets.IG, sets.IH, _signs(t.lam, t_c))
        checks.append(TermCheck(k, residual, flags, pattern))
        series["x - xbar"].append(t.x - xbar)
        series["delta"].append(t.delta)
        series["eps"].append(t.eps)
        lam_delta.append(float(abs(t.lam @ t.delta)))
    info = {"lambda_dot_delta": vanishing(lam_delta, tol.seq).to_json()}
    return _finish(concept, checks, series, tol, trend_mode, info)


def phi(a: float, b: float) -> float:
    return min(max(a, -b), max(-a, b))


def psi(a: float, b: float) -> float:
    return min(max(a, -b), max(-a, b), max(a, b))


def phi_piecewise(a: float, b: float) -> float:
    if abs(a) <= b:
        return a
    if abs(b) <= -a:
        return -b
    if abs(a) <= -b:
        return -a
    return b


def psi_piecewise(a: float, b: float) -> float:
    if abs(a) <= b:
        return a
    if abs(b) <= -a:
        return -abs(b)
    if abs(a) <= -b:
        return -abs(a)
    return b


def verify_mpcc_min_form(
    p: MpccProblem,
    xbar,
    terms,
    concept: str = "AW",
    tol: Tolerances = DEFAULT,
    trend_mode: str = "extrapolate",
):
    """Residual-free characterization using only (x^k, lambda^k).

    Every min-residual sequence must vanish; for AC and AM the tail-half minimum
    of phi or psi at each complementarity pair must be at least -tol.seq.
    """
    if concept not in ("AW", "AC", "AM"):
        raise ValueError("the residual-free form covers AW, AC and AM")
    xbar = np.asarray(xbar, dtype=float).reshape(-1)
    terms = list(terms)
    mpcc_index_sets(p, xbar, None, tol.act)
    if not terms:
        raise DimensionError("a sequence needs at least one term")
    checks = []
    series = {k: [] for k in ("x - xbar", "Lagrangian gradient", "min(-g, lambda_g)", "min(G, |lambda_G|)", "min(H, |lambda_H|)")}
    pair_values = [[] for _ in range(p.q)]
    fn = psi if concept == "AM" else phi
    for k, t in enumerate(terms):
        if t.x.shape[0] != p.n or t.lam.shape[0] != p.ell:
            raise DimensionError(f"term {k + 1} has inconsistent dimensions")
        vg, _, vG, vH = p.values(t.x)
        lg, _, lG, lH = p.split(t.lam)
        grad = float(np.linalg.norm(p.lagrangian_gradient(t.x, t.lam)))
        flags = {"lambda_g >= 0": bool(np.all(lg >= -tol.cone))}
        checks.append(TermCheck(k, grad, flags, ("min-form",)))
        series["x - xbar"].append(t.x - xbar)
        series["Lagrangian gradient"].append(grad)
        series["min(-g, lambda_g)"].append(float(np.max(np.abs(np.minimum(-vg, lg)), initial=0.0)))
        series["min(G, |lambda_G|)"].append(float(np.max(np.abs(np.minimum(vG, np.abs(lG))), initial=0.0)))
        series["min(H, |lambda_H|)"].append(float(np.max(np.abs(np.minimum(vH, np.abs(lH))), initial=0.0)))
        for i in range(p.q):
            pair_values[i].append(fn(lG[i], lH[i]))
    verdict = _finish(concept, checks, series, tol, trend_mode)
    if concept != "AW":
        name = "psi" if concept == "AM" else "phi"
        mins = []
        for i in range(p.q):
            ok, m = liminf_nonnegative(pair_values[i], tol.seq)
            mins.append(m)
            if not ok:
                verdict.reasons.append(f"tail minimum of {name} at pair {i + 1} is {m:.3g} < 0")
        verdict.info[f"{name}_tail_minimum"] = mins
    return verdict


def mpcc_min_form_to_full(p: MpccProblem, xbar, terms, tol: Tolerances = DEFAULT):
    """Rebuild (delta^k, eps^k) from (x^k, lambda^k) following the constructive argument.

    Multipliers of constraints inactive at xbar are dropped; perturbations make
    every condition of the weak system hold exactly at each term.
    """
    bar = mpcc_index_sets(p, xbar, None, tol.act)
    out = []
    for k, t in enumerate(terms, start=1):
        vg, vh, vG, vH = p.values(t.x)
        lg, lh, lG, lH = (np.array(b, dtype=float) for b in p.split(t.lam))
        dg = np.empty(p.m)
        for i in range(p.m):
            if i in bar.Ig:
                dg[i] = vg[i]
            else:
                lg[i] = 0.0
                dg[i] = max(vg[i], 1.0 / k)
        dh = vh.copy()
        dG = np.empty(p.q)
        dH = np.empty(p.q)
        for i in range(p.q):
            if i in bar.IG:
                dG[i] = -vG[i]
            else:
                lG[i] = 0.0
                dG[i] = max(-vG[i], 1.0 / k)
            if i in bar.IH:
                dH[i] = -vH[i]
            else:
                lH[i] = 0.0
                dH[i] = max(-vH[i], 1.0 / k)
        lam = p.join(lg, lh, lG, lH)
        eps = p.lagrangian_gradient(t.x, lam)
        out.append(SequenceTerm(t.x, lam, eps, p.join(dg, dh, dG, dH)))
    return out
