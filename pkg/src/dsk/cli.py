"""Command-line front end.

Exit status: 0 when the check passes or the condition holds, 1 when it fails
or is refuted, 2 on invalid input.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import warnings

import numpy as np

from . import __version__
from .cones import limiting_normal_cone, regular_normal_cone
from .config import DEFAULT
from .errors import DskError
from .gallery import EXAMPLES, run_example
from .generator import NonConvergenceWarning, PenaltyConfig, generate_am_sequence
from .geometry import membership
from .io import SCHEMA_VERSION, ProblemFile, sequence_to_json
from .problem import MpccProblem
from .qualification import (
    check_generalized_mfcq,
    check_mpcc_mfcq,
    check_mpcc_submfc,
    check_odp_submfc,
    conclude_from_mpcc_submfc,
    conclude_from_submfc,
)
from .sequences import (
    SequenceTerm,
    verify_am_sequence,
    verify_as_sequence,
    verify_mpcc_min_form,
    verify_mpcc_sequence,
    verify_sas_sequence,
)
from .stationarity import (
    check_licq,
    classify_mpcc,
    search_mpcc_multiplier,
    search_multiplier,
    verify_certificate,
)

log = logging.getLogger("dsk")


class UsageError(DskError):
    pass


# ------------------------------------------------------------------ helpers


def _clean(obj):
    """JSON-safe copy: numpy to builtin, non-finite floats to strings, sets sorted."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (set, frozenset)):
        return sorted(_clean(v) for v in obj)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def dumps(report) -> str:
    return json.dumps(_clean(report), indent=2, sort_keys=True, allow_nan=False)


def _tolerances(args):
    return DEFAULT.with_(act=args.tol_act, res=args.tol_res, seq=args.tol_seq)


def _vector(text, n=None):
    try:
        v = json.loads(text if text.lstrip().startswith("[") else f"[{text}]")
        v = np.asarray(v, dtype=float).reshape(-1)
    except (json.JSONDecodeError, ValueError, TypeError):
        raise UsageError(f"cannot read a vector from {text!r}") from None
    if n is not None and v.shape[0] != n:
        raise UsageError(f"expected {n} entries, got {v.shape[0]}")
    return v


def _disjunctive(pf):
    p = pf.problem
    return p.embed() if isinstance(p, MpccProblem) else p


def _embedded_terms(p: MpccProblem, terms):
    out = []
    for t in terms:
        delta = None if t.delta is None else p.to_embedded(t.delta)
        out.append(SequenceTerm(t.x, p.to_embedded(t.lam), t.eps, delta))
    return out


def _seq_for_disjunctive(pf, terms):
    p = pf.problem
    return _embedded_terms(p, terms) if isinstance(p, MpccProblem) else terms


def _fmt_set(s):
    return "{" + ", ".join(str(i + 1) for i in sorted(s)) + "}"


# ----------------------------------------------------------------- commands


def cmd_normal_cone(args, tol):
    pf = ProblemFile.load(args.file)
    p = _disjunctive(pf)
    x = pf.point(args.point)
    y = p.F(x)
    data = membership(p.gamma, y, tol.act)
    if data is None:
        raise DskError(f"F(x) = {y.tolist()} is not in the set")
    kinds = ["regular", "limiting"]
    if args.regular and not args.limiting:
        kinds = ["regular"]
    elif args.limiting and not args.regular:
        kinds = ["limiting"]
    report = {
        "y": y,
        "active": {
            "J": [j + 1 for j in sorted(data.J)],
            "I_exists": [i + 1 for i in sorted(data.I_exists)],
            "I_forall": [i + 1 for i in sorted(data.I_forall)],
        },
    }
    if "regular" in kinds:
        report["regular"] = str(regular_normal_cone(p.gamma, y, tol.act))
    if "limiting" in kinds:
        lim = limiting_normal_cone(p.gamma, y, tol.act)
        report["limiting"] = [str(c) for c in lim.cones]
    lines = [f"y = {y.tolist()}", f"active components J = {_fmt_set(data.J)}"]
    if "regular" in report:
        lines.append(f"regular normal cone: {report['regular']}")
    if "limiting" in report:
        lines.append("limiting normal cone: " + " U ".join(f"({c})" for c in report["limiting"]))
    return True, report, lines


def cmd_check(args, tol):
    pf = ProblemFile.load(args.file)
    p = pf.problem
    x = pf.point(args.point)
    concept = args.concept
    if isinstance(p, MpccProblem):
        if args.lam is not None:
            lam = _vector(args.lam, p.ell)
            got = classify_mpcc(p, x, lam, tol)
            ok = concept in got
            residual = float(np.linalg.norm(p.lagrangian_gradient(x, lam)))
            report = {"concept": concept, "lambda": lam, "residual": residual, "certified": sorted(got), "valid": ok}
            lines = [f"{concept}-stationarity {'verified' if ok else 'not verified'}; certifies {sorted(got) or 'nothing'}"]
            return ok, report, lines
        res = search_mpcc_multiplier(p, x, concept, tol)
    else:
        if concept not in ("M", "S"):
            raise UsageError("disjunctive problems support the concepts M and S")
        if args.lam is not None:
            cert = verify_certificate(p, x, _vector(args.lam, p.ell), concept, tol)
            lines = [
                f"{concept}-certificate {'valid' if cert.valid else 'invalid'}: residual {cert.residual:.3g}, "
                f"cone {'ok' if cert.cone_verdict else 'violated'}"
            ]
            return cert.valid, cert.to_json(), lines
        res = search_multiplier(p, x, concept, tol)
    if res.found:
        lines = [f"{concept}-stationary with multiplier {res.certificate.lam.tolist()} (branch {res.certificate.cone})"]
    else:
        lines = [f"no {concept}-multiplier exists; infeasible branches: {len(res.infeasible_branches)}"]
    return res.found, res.to_json(), lines


def cmd_verify_seq(args, tol):
    pf = ProblemFile.load(args.file)
    p = pf.problem
    x = pf.point(args.point)
    terms = pf.sequence(args.sequence)
    concept = args.concept
    mode = "final" if args.final_only else "extrapolate"
    if isinstance(p, MpccProblem):
        if args.min_form:
            v = verify_mpcc_min_form(p, x, terms, concept, tol, mode)
        else:
            if concept == "AS":
                raise UsageError("complementarity problems support AW, AC, AM and SAS")
            v = verify_mpcc_sequence(p, x, terms, concept, tol, mode, relaxed=args.i2i3_relaxed)
    else:
        if args.min_form:
            raise UsageError("--min-form applies to complementarity problems")
        fn = {"AM": verify_am_sequence, "AS": verify_as_sequence, "SAS": verify_sas_sequence}.get(concept)
        if fn is None:
            raise UsageError("disjunctive problems support AM, AS and SAS")
        v = fn(p, x, terms, tol, mode)
    lines = [f"{concept}: {'pass' if v.passed else 'fail'} ({len(v.group)} of {len(terms)} terms used)"]
    lines += [f"  {r}" for r in v.reasons]
    return v.passed, v.to_json(), lines


def cmd_submfc(args, tol):
    pf = ProblemFile.load(args.file)
    p = pf.problem
    x = pf.point(args.point)
    terms = pf.sequence(args.sequence)
    if args.mpcc or (isinstance(p, MpccProblem) and not args.embedded):
        if not isinstance(p, MpccProblem):
            raise UsageError("--mpcc needs a complementarity problem file")
        rep = check_mpcc_submfc(p, x, terms, tol)
        out = rep.to_json()
        if rep.holds:
            c = conclude_from_mpcc_submfc(rep, p, x, terms, args.concept or "AW", tol, args.i2i3_relaxed)
            out["conclusion_stationarity"] = c.to_json()
    else:
        dp = _disjunctive(pf)
        dterms = _seq_for_disjunctive(pf, terms)
        rep = check_odp_submfc(dp, x, dterms, tol, "AS" if args.as_mode else "AM")
        out = rep.to_json()
        if rep.holds:
            out["conclusion_stationarity"] = conclude_from_submfc(rep, dp, x, dterms, tol).to_json()
    lines = [f"subset MFC: {rep.conclusion}"]
    if "conclusion_stationarity" in out:
        lines.append(f"  implies {out['conclusion_stationarity']['stationarity']}-stationarity")
    if rep.pli is not None and rep.pli.witness is not None:
        lines.append(f"  positive dependence witness u = {np.round(rep.pli.witness, 12).tolist()}")
    return rep.holds, out, lines


def cmd_generate(args, tol):
    pf = ProblemFile.load(args.file)
    p = _disjunctive(pf)
    x = pf.point(args.point)
    cfg = dict(pf.doc.get("generator", {}))
    if args.schedule:
        cfg["schedule"] = list(_vector(args.schedule))
    if args.radius is not None:
        cfg["radius"] = args.radius
    if args.max_iter is not None:
        cfg["max_iter"] = args.max_iter
    try:
        config = PenaltyConfig.from_json(cfg)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    with warnings.catch_warnings(record=True):
        warnings.simplefilter("always", NonConvergenceWarning)
        res = generate_am_sequence(p, x, config, tol)
    terms = res.terms
    if isinstance(pf.problem, MpccProblem):
        mp = pf.problem
        terms = [SequenceTerm(t.x, mp.from_embedded(t.lam), t.eps, mp.from_embedded(t.delta)) for t in terms]
    doc = sequence_to_json(terms, complete=res.complete, warnings=res.warnings)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(dumps(doc) + "\n")
    report = {
        "terms": len(res.terms),
        "complete": res.complete,
        "warnings": res.warnings,
        "verified": None if res.verdict is None else res.verdict.passed,
        "sequence": None if args.out else doc,
        "output": args.out,
    }
    lines = [f"generated {len(res.terms)} term(s)" + (f" -> {args.out}" if args.out else "")]
    lines += [f"  warning: {w}" for w in res.warnings]
    if not args.out and not args.json:
        lines.append(dumps(doc))
    return res.complete, report, lines


def cmd_licq(args, tol):
    pf = ProblemFile.load(args.file)
    ok = check_licq(_disjunctive(pf), pf.point(args.point), tol)
    return ok, {"licq": ok}, [f"LICQ {'holds' if ok else 'fails'}"]


def cmd_mfcq(args, tol):
    pf = ProblemFile.load(args.file)
    if not isinstance(pf.problem, MpccProblem):
        raise UsageError("MPCC-MFCQ needs a complementarity problem file; use gmfcq otherwise")
    ok, w = check_mpcc_mfcq(pf.problem, pf.point(args.point), tol)
    lines = [f"MPCC-MFCQ {'holds' if ok else 'fails'}"] + ([] if ok else [f"  violating multiplier {w.tolist()}"])
    return ok, {"mpcc_mfcq": ok, "witness": w}, lines


def cmd_gmfcq(args, tol):
    pf = ProblemFile.load(args.file)
    ok, w, b = check_generalized_mfcq(_disjunctive(pf), pf.point(args.point), tol)
    lines = [f"generalized MFCQ {'holds' if ok else 'fails'}"] + ([] if ok else [f"  violating normal {w.tolist()}"])
    return ok, {"gmfcq": ok, "witness": w, "branch": b}, lines


def cmd_examples(args, tol):
    if args.list or not args.run:
        names = list(EXAMPLES)
        return True, {"examples": names}, names
    names = list(EXAMPLES) if args.run == "all" else [args.run]
    reports, lines = [], []
    for name in names:
        if name not in EXAMPLES:
            raise UsageError(f"unknown example {name!r}; available: {', '.join(EXAMPLES)}")
        rep = run_example(name, tol)
        reports.append(rep.to_json())
        lines.append(f"{rep.name}: {'ok' if rep.ok else 'FAILED'}")
        lines += [f"  {'PASS' if c.passed else 'FAIL'} {c.label}" for c in rep.checks]
        lines += [f"  note: {n}" for n in rep.notes]
    ok = all(r["ok"] for r in reports)
    return ok, {"examples": reports}, lines


# ------------------------------------------------------------------- parser


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable report on stdout")
    common.add_argument("--tol-act", type=float, default=None, metavar="T", help="activity tolerance")
    common.add_argument("--tol-res", type=float, default=None, metavar="T", help="residual tolerance")
    common.add_argument("--tol-seq", type=float, default=None, metavar="T", help="sequence convergence tolerance")

    parser = argparse.ArgumentParser(prog="dsk", description="orthodisjunctive stationarity toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_, seq=False):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.add_argument("file")
        sp.add_argument("point", help="name of a point in the file or a literal like 0,1")
        if seq:
            sp.add_argument("sequence", help="name of a sequence in the file or a sequence file")
        sp.set_defaults(func=fn)
        return sp

    sp = add("normal-cone", cmd_normal_cone, "regular and limiting normal cones at F(x)")
    sp.add_argument("--limiting", action="store_true")
    sp.add_argument("--regular", action="store_true")

    sp = add("check", cmd_check, "verify or search a stationarity multiplier")
    sp.add_argument("--concept", choices=["M", "S", "W", "C"], default="M")
    sp.add_argument("--lambda", dest="lam", default=None, help="multiplier to verify, e.g. 0,-1,0")

    sp = add("verify-seq", cmd_verify_seq, "verify an approximate stationarity sequence", seq=True)
    sp.add_argument("--concept", choices=["AM", "AS", "SAS", "AW", "AC"], default="AM")
    sp.add_argument("--min-form", action="store_true", help="residual-free form (complementarity problems)")
    sp.add_argument("--i2i3-relaxed", action="store_true", help="sign rules only on pairs biactive along the sequence")
    sp.add_argument("--final-only", action="store_true", help="judge convergence by the last term only")

    sp = add("submfc", cmd_submfc, "subset MFC for a given sequence", seq=True)
    sp.add_argument("--mpcc", action="store_true", help="complementarity form of the condition")
    sp.add_argument("--embedded", action="store_true", help="use the disjunctive form on a complementarity file")
    sp.add_argument("--as-mode", action="store_true", help="pass through an approximately S-stationary sequence")
    sp.add_argument("--i2i3-relaxed", action="store_true")
    sp.add_argument("--concept", choices=["AW", "AC", "AM", "SAS"], default=None)

    sp = add("generate", cmd_generate, "generate an approximately M-stationary sequence")
    sp.add_argument("--schedule", default=None, help="penalty weights, e.g. 1,10,100")
    sp.add_argument("--radius", type=float, default=None, help="locality radius")
    sp.add_argument("--max-iter", type=int, default=None)
    sp.add_argument("--out", default=None, help="write the sequence file here")

    add("licq", cmd_licq, "linear independence constraint qualification")
    add("mfcq", cmd_mfcq, "MPCC-tailored MFCQ")
    add("gmfcq", cmd_gmfcq, "generalized MFCQ with limiting normals")

    sp = sub.add_parser("examples", parents=[common], help="built-in example registry")
    sp.add_argument("--list", action="store_true")
    sp.add_argument("--run", metavar="NAME", default=None, help="example name or 'all'")
    sp.set_defaults(func=cmd_examples)
    return parser


def _setup_logging():
    level = os.environ.get("DSK_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    tol = _tolerances(args)
    try:
        ok, report, lines = args.func(args, tol)
    except DskError as exc:
        if args.json:
            print(dumps({"schema": SCHEMA_VERSION, "command": args.command, "error": str(exc)}))
        else:
            print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        # invalid option combinations rejected by the library
        if args.json:
            print(dumps({"schema": SCHEMA_VERSION, "command": args.command, "error": str(exc)}))
        else:
            print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.json:
        body = {"schema": SCHEMA_VERSION, "command": args.command, "passed": bool(ok)}
        body["report"] = report
        print(dumps(body))
    else:
        print("\n".join(lines))
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
