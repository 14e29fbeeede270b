import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dsk import (
    DisjunctiveProblem,
    InfeasiblePointError,
    MpccProblem,
    OrthoDisjunctiveSet,
    check_licq,
    classify_mpcc,
    embed_mpcc,
    search_mpcc_multiplier,
    search_multiplier,
    verify_certificate,
)
from dsk.gallery import degenerate_equality_problem, licq_problem, non_sas_problem

import oracles
from builders import random_linear_mpcc

INF = math.inf


def test_licq_example_multiplier():
    cert = verify_certificate(licq_problem(), [0, 0], [0, -1, 0], "S")
    assert cert.valid and cert.residual == 0.0
    assert verify_certificate(licq_problem(), [0, 0], [0, -1, 0], "M").valid


def test_licq_fails_on_example():
    assert not check_licq(licq_problem(), [0, 0])


def test_single_equality_row_satisfies_licq():
    p = DisjunctiveProblem(1, "x1", ("x1",), OrthoDisjunctiveSet.from_bounds([[(0, 0)]]))
    assert check_licq(p, [0.0])


def test_no_m_multiplier_for_two_box_example():
    p = non_sas_problem()
    res = search_multiplier(p, [0, 0], "M")
    assert not res.found and res.infeasible_branches
    rng = np.random.default_rng(3)
    for _ in range(50):
        assert not verify_certificate(p, [0, 0], rng.normal(size=4) * 3, "M").valid


def test_degenerate_equality_has_s_multiplier():
    res = search_multiplier(degenerate_equality_problem(), [0.0], "S")
    assert res.found and abs(res.certificate.lam[1] - 1) <= 1e-9


def test_zero_gradient_gets_zero_multiplier():
    p = DisjunctiveProblem(2, "(x1 - 1)^2 + x2^2", ("x1",), OrthoDisjunctiveSet.from_bounds([[(-INF, 2)]]))
    for concept in ("M", "S"):
        assert verify_certificate(p, [1, 0], [0.0], concept).valid
        res = search_multiplier(p, [1, 0], concept)
        assert res.found and not res.certificate.lam.any()


def test_infeasible_point_rejected():
    with pytest.raises(InfeasiblePointError):
        search_multiplier(licq_problem(), [1, 0], "M")
    with pytest.raises(ValueError):
        search_multiplier(licq_problem(), [0, 0], "X")


def test_branch_is_reported():
    res = search_multiplier(licq_problem(), [0, 0], "M")
    assert res.found and res.certificate.branch is not None and res.certificate.cone


seeds = st.integers(0, 2**32 - 1)


@given(seeds)
def test_licq_matches_exact_rank(seed):
    rng = np.random.default_rng(seed)
    n, ell = 3, int(rng.integers(1, 4))
    A = rng.integers(-2, 3, size=(ell, n))
    F = tuple(" + ".join(f"{int(a)}*x{j + 1}" for j, a in enumerate(row)) + " + 0" for row in A)
    gamma = OrthoDisjunctiveSet.from_bounds([[(0, 0)] * ell])
    p = DisjunctiveProblem(n, "0", F, gamma)
    assert check_licq(p, np.zeros(n)) == (oracles.exact_rank(A.tolist()) == ell)


def _mpcc(f):
    return MpccProblem(2, f, G=("x1",), H=("x2",))


def test_classify_opposite_signs_is_weak_only():
    assert classify_mpcc(_mpcc("x1 - x2"), [0, 0], [1, -1]) == {"W"}


def test_classify_half_zero():
    assert classify_mpcc(_mpcc("-x1"), [0, 0], [-1, 0]) == {"W", "C", "M"}


def test_classify_rejects_residual():
    p = MpccProblem(2, "x1", G=("x1",), H=("x2",))
    assert classify_mpcc(p, [0, 0], [0, 0]) == frozenset()
    assert classify_mpcc(p, [0, 0], [1, 0]) == {"W", "C", "M", "S"}


@given(seeds)
def test_classify_matches_definition(seed):
    rng = np.random.default_rng(seed)
    p = random_linear_mpcc(rng)
    x = np.zeros(p.n)
    sets = __import__("dsk").mpcc_index_sets(p, x)
    lg = np.zeros(p.m)
    lG = rng.integers(-2, 3, size=p.q).astype(float)
    lH = rng.integers(-2, 3, size=p.q).astype(float)
    for i in range(p.q):
        if i in sets.Iplus0:
            lG[i] = 0
        if i in sets.I0plus:
            lH[i] = 0
    lam = p.join(lg, [], lG, lH)
    # make the residual vanish by choosing the objective to match
    grad = -p.lagrangian_gradient(x, lam) + p.grad_f(x)
    f = oracles.linear_text(grad)
    p = MpccProblem(p.n, f, p.g, p.h, p.G, p.H)
    got = classify_mpcc(p, x, lam)
    assert got == oracles.mpcc_concepts(lG, lH, sets.I00)
    order = ["S", "M", "C", "W"]
    for a, b in zip(order, order[1:]):
        assert a not in got or b in got


@given(seeds)
def test_mpcc_search_agrees_with_embedding(seed):
    rng = np.random.default_rng(seed)
    p = random_linear_mpcc(rng)
    x = np.zeros(p.n)
    e = embed_mpcc(p)
    for concept in ("S", "M"):
        direct = search_mpcc_multiplier(p, x, concept)
        embedded = search_multiplier(e, x, concept)
        assert direct.found == embedded.found, concept
        if direct.found:
            assert concept in classify_mpcc(p, x, p.from_embedded(embedded.certificate.lam))
    s = search_mpcc_multiplier(p, x, "S")
    m = search_mpcc_multiplier(p, x, "M")
    assert not s.found or m.found


@given(seeds)
def test_s_certificates_are_m_certificates(seed):
    rng = np.random.default_rng(seed)
    bounds = oracles.random_bounds(rng, 3, 3)
    gamma = OrthoDisjunctiveSet.from_bounds(bounds)
    y = oracles.random_member(rng, bounds)
    F = tuple(f"x{i + 1} + {oracles.linear_text([], v)}" for i, v in enumerate(y))
    lam = oracles.sample_cone(rng, oracles.regular_cone_oracle(bounds, y))
    f = oracles.linear_text(-lam)
    p = DisjunctiveProblem(3, f, F, gamma)
    x = np.zeros(3)
    s = verify_certificate(p, x, lam, "S")
    assert s.valid
    assert verify_certificate(p, x, lam, "M").valid
    assert search_multiplier(p, x, "S").found and search_multiplier(p, x, "M").found
