"""Registry of worked examples with their known conclusions.

Each example rebuilds its problem, runs the relevant checks and returns a list
of named outcomes; the CLI ``examples`` command prints them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cones import SignCone, SignConeUnion, limiting_normal_cone, regular_normal_cone
from .config import DEFAULT, Tolerances
from .geometry import OrthoDisjunctiveSet
from .problem import DisjunctiveProblem, MpccProblem, embed_mpcc
from .qualification import check_odp_submfc, conclude_from_submfc, regularity_witness
from .sequences import SequenceTerm, verify_am_sequence, verify_mpcc_sequence, verify_sas_sequence
from .stationarity import check_licq, search_mpcc_multiplier, search_multiplier, verify_certificate

INF = math.inf


@dataclass
class Check:
    label: str
    passed: bool
    detail: str = ""

    def to_json(self):
        return {"label": self.label, "passed": bool(self.passed), "detail": self.detail}


@dataclass
class ExampleReport:
    name: str
    title: str
    checks: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, label, passed, detail=""):
        self.checks.append(Check(label, bool(passed), detail))

    def to_json(self):
        return {
            "name": self.name,
            "title": self.title,
            "ok": self.ok,
            "checks": [c.to_json() for c in self.checks],
            "notes": list(self.notes),
        }


# ------------------------------------------------------------------ problems


def non_sas_problem() -> DisjunctiveProblem:
    gamma = OrthoDisjunctiveSet.from_bounds(
        [
            [(-INF, 0), (0, 0), (0, INF), (-INF, INF)],
            [(-INF, 0), (0, INF), (0, 0), (-INF, 0)],
        ]
    )
    return DisjunctiveProblem(2, "-x1 - x2", ("-x1 + x2^3", "x1", "x2", "x1^3"), gamma, "non_SAS_stat")


NON_SAS_REGULAR = SignCone.parse("R+ x R- x R- x {0}")
NON_SAS_REFERENCE_LIMITING = SignConeUnion(
    (
        SignCone.parse("R+ x R x {0} x {0}"),
        SignCone.parse("R+ x {0} x R x R+"),
        SignCone.parse("R+ x R- x R- x {0}"),
    )
)


def non_sas_witness(K: int = 50):
    """x^k = (0, 1/sqrt(3k)), lambda^k = (k, k+1, 0, 0), eps^k = 0."""
    terms = []
    for k in range(1, K + 1):
        x2 = 1.0 / math.sqrt(3 * k)
        x = np.array([0.0, x2])
        # F(x) - delta = (0, 0, x2, 0) lies in the first component only
        delta = np.array([x2**3, 0.0, 0.0, 0.0])
        terms.append(SequenceTerm(x, [k, k + 1.0, 0.0, 0.0], [0.0, 0.0], delta))
    return terms


def non_sas_sas_candidates(count: int = 100, K: int = 40, seed: int = 0):
    """Sequences with vanishing Lagrangian residual and fixed-point multipliers.

    The two stationarity equations are solved for lambda_2 and lambda_3, the
    other multipliers are drawn at random; the candidates differ in the rate
    at which x^k and eps^k vanish.
    """
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        rate = rng.uniform(0.5, 2.0)
        dirs = rng.normal(size=2)
        e_dir = rng.normal(size=2)
        l1 = rng.uniform(0.0, 5.0)
        l4 = rng.normal()
        terms = []
        for k in range(1, K + 1):
            x = dirs / k**rate
            eps = e_dir / k**rate
            lam1 = l1 * rng.uniform(0.5, 1.5)
            lam4 = l4
            lam2 = eps[0] + 1.0 + lam1 - 3 * x[0] ** 2 * lam4
            lam3 = eps[1] + 1.0 - 3 * x[1] ** 2 * lam1
            terms.append(SequenceTerm(x, [lam1, lam2, lam3, lam4], eps))
        out.append(terms)
    return out


def regularity_systems():
    """F(x) = (x, -x^2) with the two sets of the regularity comparison."""
    g1 = OrthoDisjunctiveSet.from_bounds([[(0, INF), (-INF, INF)], [(-INF, INF), (0, INF)]])
    g2 = OrthoDisjunctiveSet.from_bounds([[(0, INF), (0, 0)], [(0, 0), (0, INF)]])
    F = ("x1", "-x1^2")
    return DisjunctiveProblem(1, "0", F, g1, "gamma1"), DisjunctiveProblem(1, "0", F, g2, "gamma2")


def regularity_witness_terms(K: int = 100, with_delta: bool = True):
    out = []
    for k in range(1, K + 1):
        x = 1.0 / (2 * k)
        w = {"x": [x], "xi": [1.0]}
        if with_delta:
            w["delta"] = [x, -x * x]
        out.append(w)
    return out


def licq_problem() -> DisjunctiveProblem:
    gamma = OrthoDisjunctiveSet.from_bounds([[(-INF, 0), (0, 0), (0, INF)], [(-INF, 0), (0, INF), (0, 0)]])
    return DisjunctiveProblem(2, "x1", ("x1 + x2", "x1", "x2"), gamma, "LICQ_stronger")


LICQ_MULTIPLIER = (0.0, -1.0, 0.0)


def licq_constant_sequence(K: int = 20):
    return [SequenceTerm([0.0, 0.0], LICQ_MULTIPLIER, [0.0, 0.0], [0.0, 0.0, 0.0]) for _ in range(K)]


def degenerate_equality_problem() -> DisjunctiveProblem:
    gamma = OrthoDisjunctiveSet.from_bounds([[(0, 0), (0, 0)]])
    return DisjunctiveProblem(1, "x1", ("x1^2 / 2", "-x1"), gamma, "ODP-subMFC_Mstat_not_equivalent")


def degenerate_equality_family(count: int = 50, K: int = 30, seed: int = 1):
    """Admissible sequences: delta^k is forced to equal F(x^k)."""
    rng = np.random.default_rng(seed)
    p = degenerate_equality_problem()
    out = []
    for _ in range(count):
        rate = rng.uniform(0.75, 2.0)
        s = rng.choice([-1.0, 1.0])
        l1 = rng.normal() * rng.choice([0.0, 1.0, 10.0])
        e = rng.normal()
        terms = []
        for k in range(1, K + 1):
            x = s / (k + 1) ** rate
            eps = e / (k + 1) ** rate
            lam2 = 1.0 + l1 * x - eps
            terms.append(SequenceTerm([x], [l1, lam2], [eps], p.F([x])))
        out.append(terms)
    return out


def am_reg_fails_problem() -> DisjunctiveProblem:
    gamma = OrthoDisjunctiveSet.from_bounds([[(0, INF), (-INF, INF)], [(-INF, INF), (0, INF)]])
    return DisjunctiveProblem(1, "x1", ("x1", "-x1^2"), gamma, "AM-reg_fails_at_M_stat_point")


def am_reg_fails_sequences(K: int = 50):
    first = [SequenceTerm([-1.0 / k], [-1.0, 0.0], [0.0], [-1.0 / k, 0.0]) for k in range(1, K + 1)]
    second = [
        SequenceTerm([-1.0 / k], [0.0, -k / 2.0], [0.0], [-1.0 / k, -1.0 / k**2]) for k in range(1, K + 1)
    ]
    return first, second


def mpcc_example() -> MpccProblem:
    return MpccProblem(2, "-x1", ("x1 - x2",), (), ("x1",), ("x2",), "mpcc_example")


def mpcc_sas_candidates(count: int = 100, K: int = 40, seed: int = 2):
    """Sequences with nonnegative (lambda_G, lambda_H) and x^k, delta^k -> 0.

    Half of them make the residual as small as the sign rule permits, the rest
    draw multipliers at random.
    """
    rng = np.random.default_rng(seed)
    p = mpcc_example()
    out = []
    for c in range(count):
        rate = rng.uniform(0.5, 2.0)
        xd = np.abs(rng.normal(size=2))
        terms = []
        for k in range(1, K + 1):
            x = xd / k**rate
            if c % 2 == 0:
                # best the sign rule allows: lambda_g = 1/2, lambda_G = lambda_H = 0
                lg = 0.5 + rng.normal() / k
                lG, lH = 0.0, 0.0
            else:
                lg = abs(rng.normal())
                lG, lH = np.abs(rng.normal(size=2))
            lam = p.join([max(lg, 0.0)], [], [lG], [lH])
            vg, _, vG, vH = p.values(x)
            # every constraint made active at the perturbed point
            delta = p.join(vg, [], -vG, -vH)
            terms.append(SequenceTerm(x, lam, p.lagrangian_gradient(x, lam), delta))
        out.append(terms)
    return out


# ------------------------------------------------------------------- runners

TITLES = {
    "non_SAS_stat": "global minimizer that is AM- but not SAS- or M-stationary",
    "AM_vs_AS_regularity": "AM- and AS-regularity are independent",
    "LICQ_stronger": "S-stationary point where LICQ fails",
    "ODP-subMFC_Mstat_not_equivalent": "M-stationary point where the subset MFC cannot hold",
    "AM-reg_fails_at_M_stat_point": "subset MFC detects M-stationarity where AM-regularity fails",
    "mpcc_example": "complementarity problem whose minimizer is not SAS-stationary",
}


def _run_non_sas(tol: Tolerances) -> ExampleReport:
    rep = ExampleReport("non_SAS_stat", TITLES["non_SAS_stat"])
    p = non_sas_problem()
    y = p.F([0.0, 0.0])
    reg = regular_normal_cone(p.gamma, y, tol.act)
    rep.add("regular cone is R+ x R- x R- x {0}", reg == NON_SAS_REGULAR, str(reg))
    lim = limiting_normal_cone(p.gamma, y, tol.act)
    contains = all(lim.includes(c) for c in NON_SAS_REFERENCE_LIMITING.cones)
    rep.add("limiting cone contains the three listed cones", contains, str(lim))
    if lim != NON_SAS_REFERENCE_LIMITING:
        rep.notes.append(
            f"computed limiting cone {lim} is larger than {NON_SAS_REFERENCE_LIMITING}: "
            "at (0, 0, 0, t), t > 0, only the first component is active and contributes R+ x R x R- x {0}"
        )
    m = search_multiplier(p, [0.0, 0.0], "M", tol)
    rep.add("no M-stationary multiplier", not m.found, f"infeasible branches: {m.infeasible_branches}")
    am = verify_am_sequence(p, [0.0, 0.0], non_sas_witness(), tol.with_(seq=max(tol.seq, 1e-2)))
    rep.add("witness sequence is approximately M-stationary", am.passed, "; ".join(am.reasons))
    fails = [not verify_sas_sequence(p, [0.0, 0.0], s, tol).passed for s in non_sas_sas_candidates()]
    rep.add("every SAS candidate is rejected", all(fails), f"{sum(fails)}/{len(fails)} rejected")
    return rep


def _run_regularity(tol: Tolerances) -> ExampleReport:
    rep = ExampleReport("AM_vs_AS_regularity", TITLES["AM_vs_AS_regularity"])
    p1, p2 = regularity_systems()
    y = np.zeros(2)
    r1 = regular_normal_cone(p1.gamma, y, tol.act)
    rep.add("gamma1: regular cone is {0} x {0}", r1 == SignCone.parse("{0} x {0}"), str(r1))
    w1 = regularity_witness(p1, [0.0], regularity_witness_terms(), "AM", tol)
    rep.add("gamma1: AM-regularity refuted", w1.falsified, f"xi limit {w1.xi_limit.tolist()}")
    l2 = limiting_normal_cone(p2.gamma, y, tol.act)
    rep.add("gamma2: R x {0} inside the limiting cone", l2.includes(SignCone.parse("R x {0}")), str(l2))
    w2 = regularity_witness(p2, [0.0], regularity_witness_terms(with_delta=False), "AS", tol)
    rep.add("gamma2: AS-regularity refuted", w2.falsified, f"xi limit {w2.xi_limit.tolist()}")
    return rep


def _run_licq(tol: Tolerances) -> ExampleReport:
    rep = ExampleReport("LICQ_stronger", TITLES["LICQ_stronger"])
    p = licq_problem()
    cert = verify_certificate(p, [0.0, 0.0], LICQ_MULTIPLIER, "S", tol)
    rep.add("S-certificate (0, -1, 0) verifies with zero residual", cert.valid and cert.residual == 0.0, f"residual {cert.residual}")
    rep.add("LICQ fails", not check_licq(p, [0.0, 0.0], tol))
    sas = verify_sas_sequence(p, [0.0, 0.0], licq_constant_sequence(), tol)
    rep.add("constant SAS sequence passes", sas.passed, "; ".join(sas.reasons))
    return rep


def _run_degenerate(tol: Tolerances) -> ExampleReport:
    rep = ExampleReport("ODP-subMFC_Mstat_not_equivalent", TITLES["ODP-subMFC_Mstat_not_equivalent"])
    p = degenerate_equality_problem()
    s = search_multiplier(p, [0.0], "S", tol)
    lam2 = s.certificate.lam[1] if s.found else float("nan")
    rep.add("S-certificate with lambda_2 = 1", s.found and abs(lam2 - 1.0) <= 1e-9, f"lambda = {s.certificate.lam.tolist() if s.found else None}")
    reports = [check_odp_submfc(p, [0.0], t, tol) for t in degenerate_equality_family()]
    forced = all(r.conclusion == "fails" and r.index_set["I"] == frozenset({0, 1}) for r in reports)
    rep.add("subset MFC fails on every admissible sequence with I = {1, 2}", forced, f"{sum(r.conclusion == 'fails' for r in reports)}/{len(reports)} fail")
    return rep


def _run_am_reg_fails(tol: Tolerances) -> ExampleReport:
    rep = ExampleReport("AM-reg_fails_at_M_stat_point", TITLES["AM-reg_fails_at_M_stat_point"])
    p = am_reg_fails_problem()
    first, second = am_reg_fails_sequences()
    r1 = check_odp_submfc(p, [0.0], first, tol)
    rep.add("first sequence: subset MFC holds", r1.holds, r1.conclusion)
    if r1.holds:
        c = conclude_from_submfc(r1, p, [0.0], first, tol)
        rep.add("conclusion M-stationary, confirmed by search", c.level in ("M", "S") and c.certificate.valid, f"{c.level}, lambda = {c.certificate.lam.tolist()}")
    r2 = check_odp_submfc(p, [0.0], second, tol)
    rep.add("second sequence: subset MFC fails", r2.conclusion == "fails", r2.conclusion)
    return rep


def _run_mpcc(tol: Tolerances) -> ExampleReport:
    rep = ExampleReport("mpcc_example", TITLES["mpcc_example"])
    p = mpcc_example()
    e = embed_mpcc(p)
    rep.add("embedding has l = 3 and t = 2", e.ell == 3 and e.gamma.n_components == 2, f"l = {e.ell}, t = {e.gamma.n_components}")
    fails = [not verify_mpcc_sequence(p, [0.0, 0.0], s, "SAS", tol).passed for s in mpcc_sas_candidates()]
    rep.add("every SAS candidate is rejected", all(fails), f"{sum(fails)}/{len(fails)} rejected")
    w = search_mpcc_multiplier(p, [0.0, 0.0], "W", tol)
    rep.add("W-multiplier exists", w.found)
    if w.found:
        lam = w.certificate.lam
        eps = p.lagrangian_gradient([0.0, 0.0], lam)
        const = [SequenceTerm([0.0, 0.0], lam, eps, np.zeros(p.ell)) for _ in range(20)]
        v = verify_mpcc_sequence(p, [0.0, 0.0], const, "AW", tol)
        rep.add("constant W-certificate sequence passes AW", v.passed, "; ".join(v.reasons))
    s = search_mpcc_multiplier(p, [0.0, 0.0], "S", tol)
    rep.add("no S-multiplier", not s.found)
    return rep


EXAMPLES = {
    "non_SAS_stat": _run_non_sas,
    "AM_vs_AS_regularity": _run_regularity,
    "LICQ_stronger": _run_licq,
    "ODP-subMFC_Mstat_not_equivalent": _run_degenerate,
    "AM-reg_fails_at_M_stat_point": _run_am_reg_fails,
    "mpcc_example": _run_mpcc,
}


def run_example(name: str, tol: Tolerances = DEFAULT) -> ExampleReport:
    try:
        runner = EXAMPLES[name]
    except KeyError:
        raise KeyError(f"unknown example {name!r}; available: {', '.join(EXAMPLES)}") from None
    return runner(tol)


def example_titles() -> dict:
    return {name: TITLES[name] for name in EXAMPLES}
