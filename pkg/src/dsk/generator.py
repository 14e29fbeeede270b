"""Approximately M-stationary sequences from a quadratic penalty.

For each weight k the surrogate

    f(x) + k/2 * ||F(x) - y||^2 + 1/2 * ||x - xbar||^2

is decreased by alternating an exact projection step in y with a descent step
in x.  The emitted multiplier is k * (F(x) - y), a regular normal at y.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .cones import regular_normal_cone
from .config import DEFAULT, Tolerances
from .errors import DomainError
from .geometry import project_onto_union
from .problem import DisjunctiveProblem
from .sequences import SequenceTerm, verify_am_sequence

log = logging.getLogger(__name__)


class NonConvergenceWarning(UserWarning):
    pass


DIRECTIONS = ("newton", "gauss-newton", "gradient")


@dataclass
class PenaltyConfig:
    schedule: tuple = tuple(2.0**e for e in range(16))
    max_iter: int = 400
    grad_tol: float = 1e-10
    armijo: float = 1e-4
    backtrack: float = 0.5
    max_backtracks: int = 60
    radius: float = 1.0
    y_radius: float = 1.0
    direction: str = "newton"
    verify_tol: float | None = 1e-3

    @classmethod
    def from_json(cls, d) -> "PenaltyConfig":
        d = dict(d or {})
        d.pop("point", None)
        if "schedule" in d:
            d["schedule"] = tuple(float(v) for v in d["schedule"])
        return cls(**d)

    def __post_init__(self):
        w = list(self.schedule)
        if not w or any(v <= 0 for v in w) or any(b <= a for a, b in zip(w, w[1:])):
            raise ValueError("penalty weights must be positive and increasing")
        if self.radius <= 0 or self.y_radius <= 0:
            raise ValueError("radii must be positive")
        if self.direction not in DIRECTIONS:
            raise ValueError(f"direction must be one of {DIRECTIONS}")


@dataclass
class StepDiagnostics:
    k: float
    iterations: int
    stationarity: float
    converged: bool
    monotone: bool
    proof_eps: list
    cone_ok: bool
    component: int
    on_boundary: bool = False


@dataclass
class GenerationResult:
    terms: list
    diagnostics: list
    warnings: list = field(default_factory=list)
    verdict: object = None

    @property
    def complete(self) -> bool:
        return not self.warnings


def _surrogate(p, x, y, k, xbar):
    r = p.F(x) - y
    return p.f(x) + 0.5 * k * float(r @ r) + 0.5 * float((x - xbar) @ (x - xbar))


def _reduced(p, x, box, k, xbar):
    """Surrogate with y minimized over one component; returns (value, gradient)."""
    Fx = p.F(x)
    r = Fx - box.project(Fx)
    val = p.f(x) + 0.5 * k * float(r @ r) + 0.5 * float((x - xbar) @ (x - xbar))
    return val, p.grad_f(x) + k * (p.jacobian(x).T @ r) + (x - xbar)


def _project(p, z, ybar, y_radius):
    """Nearest point of the set, preferring components inside the y-ball."""
    gamma = p.gamma
    near = []
    for j, c in enumerate(gamma.components):
        yj = c.project(z)
        if np.linalg.norm(yj - ybar) <= y_radius:
            near.append(j)
    return project_onto_union(gamma, z, near or None)


def _newton_direction(p, x, box, k, xbar, g):
    """Newton step on the reduced surrogate with a difference Hessian, eigenvalues clipped."""
    n = p.n
    H = np.empty((n, n))
    for i in range(n):
        h = 1e-6 * max(1.0, abs(x[i]))
        e = np.zeros(n)
        e[i] = h
        H[:, i] = (_reduced(p, x + e, box, k, xbar)[1] - _reduced(p, x - e, box, k, xbar)[1]) / (2 * h)
    H = 0.5 * (H + H.T)
    w, V = np.linalg.eigh(H)
    if not np.all(np.isfinite(w)):
        return None
    w = np.maximum(w, max(1e-8 * float(np.max(np.abs(w))), 1e-12))
    return -(V @ ((V.T @ g) / w))


def _ball(x, xbar, radius):
    d = x - xbar
    n = float(np.linalg.norm(d))
    return x if n <= radius else xbar + d * (radius / n)


def _directions(p, x, box, k, xbar, g, cfg):
    out = []
    if cfg.direction == "newton":
        try:
            dn = _newton_direction(p, x, box, k, xbar, g)
        except DomainError:
            dn = None
        if dn is not None:
            out.append(dn)
    if cfg.direction != "gradient":
        Fx = p.F(x)
        active = Fx != box.project(Fx)
        Ja = p.jacobian(x)[active]
        out.append(-np.linalg.solve(k * (Ja.T @ Ja) + np.eye(p.n), g))
    out.append(-g)
    return out


def _minimize(p, x, k, xbar, ybar, cfg):
    """Alternate the exact y-update with an Armijo x-step.

    The x-step works on the surrogate with y minimized over the component that
    the last y-update selected, so coordinates strictly inside that component
    are not held in place; its value never exceeds the fixed-y surrogate.
    """
    mono = True
    y, j = _project(p, p.F(x), ybar, cfg.y_radius)
    pg = np.inf
    for it in range(1, cfg.max_iter + 1):
        box = p.gamma.components[j]
        phi0, g = _reduced(p, x, box, k, xbar)
        gf = p.grad_f(x)
        scale = max(1.0, float(np.linalg.norm(gf)), float(np.linalg.norm(g - gf - (x - xbar))))
        pg = float(np.linalg.norm(x - _ball(x - g, xbar, cfg.radius)))
        if pg <= cfg.grad_tol * scale:
            return x, y, j, it, pg, True, mono
        xn = None
        for d in _directions(p, x, box, k, xbar, g, cfg):
            t = 1.0
            for _ in range(cfg.max_backtracks):
                cand = _ball(x + t * d, xbar, cfg.radius)
                try:
                    phin = _reduced(p, cand, box, k, xbar)[0]
                except DomainError:
                    phin = np.inf
                pred = float(g @ (cand - x))
                if pred < 0 and phin <= phi0 + cfg.armijo * pred:
                    xn = cand
                    break
                t *= cfg.backtrack
            if xn is not None:
                break
        if xn is None:
            # no sufficient decrease left at machine precision
            return x, y, j, it, pg, pg <= 1e-7 * scale, mono
        x = xn
        yn, jn = _project(p, p.F(x), ybar, cfg.y_radius)
        if _surrogate(p, x, yn, k, xbar) > phin + 1e-12 * max(1.0, abs(phin)):
            mono = False
        y, j = yn, jn
    return x, y, j, cfg.max_iter, pg, False, mono


def generate_am_sequence(p: DisjunctiveProblem, xbar, cfg: PenaltyConfig | None = None, tol: Tolerances = DEFAULT):
    cfg = cfg or PenaltyConfig()
    xbar = np.asarray(xbar, dtype=float).reshape(-1)
    p.require_feasible(xbar, tol.act)
    ybar = p.F(xbar)
    x = xbar.copy()
    terms, diags, warns = [], [], []
    for k in cfg.schedule:
        x, y, j, iters, pg, ok, mono = _minimize(p, x, k, xbar, ybar, cfg)
        delta = p.F(x) - y
        lam = k * delta
        cone_ok = regular_normal_cone(p.gamma, y, tol.act).contains(lam, tol.cone)
        if not cone_ok:
            y, j = project_onto_union(p.gamma, p.F(x))
            delta = p.F(x) - y
            lam = k * delta
            cone_ok = regular_normal_cone(p.gamma, y, tol.act).contains(lam, tol.cone)
        boundary = float(np.linalg.norm(x - xbar)) >= cfg.radius * (1 - 1e-9)
        diags.append(StepDiagnostics(k, iters, pg, ok, mono, (xbar - x).tolist(), cone_ok, j, boundary))
        if not ok or not cone_ok:
            what = "inner solver did not converge" if not ok else "multiplier is not a regular normal"
            msg = f"k = {k:g}: {what}; returning {len(terms)} term(s)"
            warns.append(msg)
            warnings.warn(msg, NonConvergenceWarning, stacklevel=2)
            log.warning(msg)
            break
        if boundary:
            # the locality ball is still binding: the term is not a stationary point
            # of the penalty, so it carries no information about xbar
            log.debug("k=%g: solution on the locality boundary, skipped", k)
            continue
        eps = p.lagrangian_gradient(x, lam)
        terms.append(SequenceTerm(x.copy(), lam, eps, delta))
        log.debug("k=%g iterations=%d |pgrad|=%.3g", k, iters, pg)
    if not terms and not warns:
        msg = "locality ball binding for every weight; no terms produced"
        warns.append(msg)
        warnings.warn(msg, NonConvergenceWarning, stacklevel=2)
    verdict = None
    if terms and cfg.verify_tol is not None:
        verdict = verify_am_sequence(p, xbar, terms, tol.with_(seq=cfg.verify_tol))
        if not verdict.passed:
            msg = "generated sequence fails AM verification: " + "; ".join(verdict.reasons)
            warns.append(msg)
            warnings.warn(msg, NonConvergenceWarning, stacklevel=2)
    return GenerationResult(terms, diags, warns, verdict)
