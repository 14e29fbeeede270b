import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dsk import (
    ConsistencyError,
    DisjunctiveProblem,
    MpccProblem,
    OrthoDisjunctiveSet,
    SequenceTerm,
    WitnessError,
    check_generalized_mfcq,
    check_licq,
    check_mpcc_mfcq,
    check_mpcc_submfc,
    check_odp_submfc,
    conclude_from_mpcc_submfc,
    conclude_from_submfc,
    regularity_witness,
    search_multiplier,
    verify_am_sequence,
    verify_mpcc_sequence,
)
from dsk import gallery
from dsk.qualification import constructive_submfc_sequence

from builders import active_sequence, inequality_instance, random_linear_mpcc
from oracles import linear_text

INF = math.inf


# ------------------------------------------------------------- ODP subMFC


def test_first_sequence_of_am_regularity_example_holds_and_gives_m():
    p = gallery.am_reg_fails_problem()
    first, _ = gallery.am_reg_fails_sequences()
    rep = check_odp_submfc(p, [0.0], first)
    assert rep.conclusion == "holds"
    assert rep.index_set["I"] == {0}
    assert rep.signs["lambda"] == (-1,)
    np.testing.assert_allclose(rep.generators[0], [-1.0])
    c = conclude_from_submfc(rep, p, [0.0], first)
    assert c.level == "M"
    assert c.certificate.valid
    assert search_multiplier(p, [0.0], "M").found


def test_second_sequence_fails_with_zero_sign():
    p = gallery.am_reg_fails_problem()
    _, second = gallery.am_reg_fails_sequences()
    rep = check_odp_submfc(p, [0.0], second)
    assert rep.conclusion == "fails"
    assert rep.index_set["I"] == {0, 1}
    assert rep.signs["lambda"][0] == 0
    with pytest.raises(ValueError):
        conclude_from_submfc(rep, p, [0.0], second)


def test_degenerate_family_always_fails_with_full_index_set():
    p = gallery.degenerate_equality_problem()
    for terms in gallery.degenerate_equality_family(count=10):
        rep = check_odp_submfc(p, [0.0], terms)
        assert rep.conclusion == "fails"
        assert rep.index_set["I"] == {0, 1}
        u = rep.pli.witness
        assert np.all(u >= -1e-12) and abs(u.sum() - 1) < 1e-9
        assert np.linalg.norm(sum(ui * g for ui, g in zip(u, rep.generators))) < 1e-9


def test_licq_constant_sequence_fails_but_released_sequence_concludes_s():
    p = gallery.licq_problem()
    # delta = 0 keeps every coordinate active, two of them with sign 0
    assert check_odp_submfc(p, [0.0, 0.0], gallery.licq_constant_sequence()).conclusion == "fails"
    lam = gallery.LICQ_MULTIPLIER
    terms = [SequenceTerm([0.0, 0.0], lam, [0.0, 0.0], [1.0 / k, 0.0, -1.0 / k]) for k in range(1, 31)]
    rep = check_odp_submfc(p, [0.0, 0.0], terms)
    assert rep.holds and rep.index_set["I"] == {1}
    c = conclude_from_submfc(rep, p, [0.0, 0.0], terms)
    assert c.level == "S"


def test_empty_index_set_concludes_with_zero_multiplier():
    gamma = OrthoDisjunctiveSet.from_bounds([[(-INF, 1.0)]])
    p = DisjunctiveProblem(1, "x1^2", ("x1",), gamma)
    terms = [SequenceTerm([1.0 / k], [0.0], [2.0 / k], [0.0]) for k in range(1, 31)]
    rep = check_odp_submfc(p, [0.0], terms)
    assert rep.holds and rep.index_set["I"] == frozenset()
    c = conclude_from_submfc(rep, p, [0.0], terms)
    np.testing.assert_array_equal(c.certificate.lam, [0.0])
    assert "zero multiplier" in c.note


def test_invalid_sequence_reported():
    p = gallery.am_reg_fails_problem()
    bad = [SequenceTerm([1.0], [-1.0, 0.0], [0.0], [1.0, 0.0]) for _ in range(10)]
    assert check_odp_submfc(p, [0.0], bad).conclusion == "sequence-invalid"
    with pytest.raises(ValueError):
        check_odp_submfc(p, [0.0], bad, mode="XY")


def test_report_json_uses_one_based_indices():
    p = gallery.am_reg_fails_problem()
    _, second = gallery.am_reg_fails_sequences()
    doc = check_odp_submfc(p, [0.0], second).to_json()
    assert doc["index_set"]["I"] == [1, 2]
    assert doc["positively_independent"] is False


def test_consistency_error_when_search_disagrees(monkeypatch):
    import dsk.qualification as q

    p = gallery.am_reg_fails_problem()
    first, _ = gallery.am_reg_fails_sequences()
    rep = check_odp_submfc(p, [0.0], first)
    monkeypatch.setattr(q, "search_multiplier", lambda *a, **k: type("R", (), {"found": False, "infeasible_branches": [0]})())
    with pytest.raises(ConsistencyError):
        q.conclude_from_submfc(rep, p, [0.0], first)


@pytest.mark.parametrize(
    "problem, xbar, sequences",
    [
        (gallery.am_reg_fails_problem(), [0.0], list(gallery.am_reg_fails_sequences())),
        (gallery.licq_problem(), [0.0, 0.0], [gallery.licq_constant_sequence()]),
        (gallery.degenerate_equality_problem(), [0.0], gallery.degenerate_equality_family(count=5)),
        (gallery.non_sas_problem(), [0.0, 0.0], [gallery.non_sas_witness(200)]),
    ],
)
def test_am_and_as_modes_agree_on_examples(problem, xbar, sequences):
    for terms in sequences:
        a = check_odp_submfc(problem, xbar, terms, mode="AM")
        b = check_odp_submfc(problem, xbar, terms, mode="AS")
        assert a.conclusion == b.conclusion


# ------------------------------------------------ inequality specialisation


def test_inequality_specialisation_on_random_instances():
    rng = np.random.default_rng(11)
    seen = set()
    for _ in range(60):
        p, terms = inequality_instance(rng)
        xbar = np.zeros(p.n)
        assert verify_am_sequence(p, xbar, terms).passed
        rep = check_odp_submfc(p, xbar, terms)
        m = search_multiplier(p, xbar, "M")
        if rep.holds:
            assert m.found
        if m.found:
            built = constructive_submfc_sequence(p, xbar, m.certificate.lam)
            assert check_odp_submfc(p, xbar, built).holds
        seen.add((rep.holds, m.found))
    # both directions are exercised
    assert {(True, True), (False, False), (False, True)} <= seen


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1))
def test_single_component_constructive_sequence(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    ell = int(rng.integers(1, 4))
    bounds = []
    for _ in range(ell):
        lo, hi = sorted(rng.choice([-2.0, -1.0, 0.0, 1.0], size=2, replace=False))
        bounds.append((lo, hi) if rng.random() < 0.7 else (lo, INF))
    A = rng.integers(-2, 3, size=(ell, n)).astype(float)
    # F(0) sits on a bound of each coordinate with probability 1/2
    c = np.array([b[int(rng.integers(0, 2))] if rng.random() < 0.5 and math.isfinite(b[1]) else b[0] for b in bounds])
    fmap = tuple(linear_text(A[i], c[i]) for i in range(ell))
    gamma = OrthoDisjunctiveSet.from_bounds([bounds])
    lam = rng.normal(size=ell)
    from dsk import regular_normal_cone

    cone = regular_normal_cone(gamma, c)
    lam = np.array([0.0 if not cone.contains(np.eye(ell)[i] * lam[i]) else lam[i] for i in range(ell)])
    f = linear_text(-(A.T @ lam))
    p = DisjunctiveProblem(n, f, fmap, gamma)
    xbar = np.zeros(n)
    m = search_multiplier(p, xbar, "M")
    assert m.found
    terms = constructive_submfc_sequence(p, xbar, m.certificate.lam, K=20)
    rep = check_odp_submfc(p, xbar, terms)
    assert rep.holds


def test_constructive_sequence_preconditions():
    p = gallery.am_reg_fails_problem()
    with pytest.raises(ValueError):
        constructive_submfc_sequence(p, [0.0], [-1.0, 0.0])
    q = gallery.degenerate_equality_problem()
    with pytest.raises(ValueError):
        constructive_submfc_sequence(q, [0.0], [0.0, 1.0])


# ------------------------------------------------------------- MPCC subMFC


def _strict_mpcc():
    return MpccProblem(2, "(x1 - 1)^2 + x2", (), (), ("x1",), ("x2",))


def test_mpcc_submfc_holds_on_strictly_complementary_point():
    p = _strict_mpcc()
    terms = []
    for k in range(1, 31):
        x = np.array([1 + 1 / k, 1 / k])
        lam = p.join([], [], [0.0], [1.0])
        vg, vh, vG, vH = p.values(x)
        delta = p.join([], [], [0.0], -vH)
        terms.append(SequenceTerm(x, lam, p.lagrangian_gradient(x, lam), delta))
    rep = check_mpcc_submfc(p, [1.0, 0.0], terms)
    assert rep.holds
    assert rep.index_set["I3"] == {0} and rep.index_set["I2"] == set()
    c = conclude_from_mpcc_submfc(rep, p, [1.0, 0.0], terms, "AM")
    assert c.level == "M"
    c = conclude_from_mpcc_submfc(rep, p, [1.0, 0.0], terms, "AW")
    assert c.level == "W"


def test_mpcc_sas_level_gives_s():
    p = MpccProblem(2, "x1 + x2", (), (), ("x1",), ("x2",))
    lam = p.join([], [], [1.0], [1.0])
    terms = [SequenceTerm([0.0, 0.0], lam, p.lagrangian_gradient([0.0, 0.0], lam), np.zeros(2)) for _ in range(10)]
    rep = check_mpcc_submfc(p, [0.0, 0.0], terms)
    assert rep.holds
    assert conclude_from_mpcc_submfc(rep, p, [0.0, 0.0], terms, "SAS").level == "S"


def test_relaxed_mode_matches_strict_on_valid_sequences():
    # biactive at xbar, only G stays active along the sequence; lambda_H must vanish
    p = MpccProblem(2, "x1", (), (), ("x1",), ("x2",))
    terms = []
    for k in range(1, 31):
        x = np.array([0.0, 1.0 / k])
        lam = p.join([], [], [1.0], [0.0])
        terms.append(SequenceTerm(x, lam, p.lagrangian_gradient(x, lam), np.zeros(2)))
    strict = verify_mpcc_sequence(p, [0.0, 0.0], terms, "AM")
    relaxed = verify_mpcc_sequence(p, [0.0, 0.0], terms, "AM", relaxed=True)
    assert strict.passed and relaxed.passed
    rep = check_mpcc_submfc(p, [0.0, 0.0], terms)
    assert rep.holds and rep.index_set["I2"] == {0} and rep.index_set["I3"] == set()
    for mode in (False, True):
        assert conclude_from_mpcc_submfc(rep, p, [0.0, 0.0], terms, "AM", relaxed=mode).level == "M"


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1))
def test_mpcc_submfc_agrees_with_embedding(seed):
    rng = np.random.default_rng(seed)
    p = random_linear_mpcc(rng)
    e = p.embed()
    xbar = np.zeros(p.n)
    # nonzero multipliers everywhere, same signs on biactive pairs
    lg = rng.integers(1, 3, size=p.m).astype(float)
    lG = rng.choice([-2.0, -1.0, 1.0, 2.0], size=p.q)
    lH = rng.choice([1.0, 2.0], size=p.q) * np.sign(lG) if rng.random() < 0.5 else rng.choice([-1.0, 1.0], size=p.q)
    terms = active_sequence(p, p.join(lg, [], lG, lH), rng, K=16)
    emb = [SequenceTerm(t.x, p.to_embedded(t.lam), t.eps, p.to_embedded(t.delta)) for t in terms]
    if not verify_am_sequence(e, xbar, emb).passed:
        return
    a = check_mpcc_submfc(p, xbar, terms)
    b = check_odp_submfc(e, xbar, emb)
    assert a.conclusion == b.conclusion


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1))
def test_mpcc_mfcq_implies_submfc(seed):
    rng = np.random.default_rng(seed)
    p = random_linear_mpcc(rng)
    xbar = np.zeros(p.n)
    holds, _ = check_mpcc_mfcq(p, xbar)
    if not holds:
        return
    lam = p.join(rng.integers(1, 3, size=p.m), [], rng.choice([-1.0, 1.0], size=p.q), rng.choice([-1.0, 1.0], size=p.q))
    terms = active_sequence(p, lam, rng, K=16)
    rep = check_mpcc_submfc(p, xbar, terms)
    if rep.conclusion != "sequence-invalid":
        assert rep.holds


# --------------------------------------------------------- classical CQs


def test_mpcc_mfcq_parallel_pair_fails():
    p = MpccProblem(1, "x1", (), (), ("x1",), ("2*x1",))
    holds, lam = check_mpcc_mfcq(p, [0.0])
    assert not holds
    lg, lh, lG, lH = p.split(lam)
    assert abs(lG[0] + 2 * lH[0]) < 1e-9 and np.linalg.norm(lam) > 0


def test_mpcc_mfcq_fails_on_complementarity_example():
    p = gallery.mpcc_example()
    holds, lam = check_mpcc_mfcq(p, [0.0, 0.0])
    assert not holds
    Jg, Jh, JG, JH = p.jacobians([0.0, 0.0])
    lg, _, lG, lH = p.split(lam)
    assert np.all(lg >= -1e-12)
    np.testing.assert_allclose(Jg.T @ lg - JG.T @ lG - JH.T @ lH, 0.0, atol=1e-9)


def test_mpcc_mfcq_holds_with_independent_gradients():
    p = _strict_mpcc()
    assert check_mpcc_mfcq(p, [1.0, 0.0])[0]


def _mfcq_oracle(p):
    """Free multipliers as free LP variables, sign-constrained ones normalised."""
    from scipy.optimize import linprog

    from dsk import mpcc_index_sets
    from oracles import exact_rank

    s = mpcc_index_sets(p, np.zeros(p.n))
    Jg, _, JG, JH = p.jacobians(np.zeros(p.n))
    free = [JG[i] for i in s.IG] + [JH[i] for i in s.IH]
    if free and exact_rank(free) < len(free):
        return False
    ineq = [Jg[i] for i in s.Ig]
    if not ineq:
        return True
    U, R = np.array(ineq).T, (np.array(free).T if free else np.zeros((p.n, 0)))
    A_eq = np.vstack([np.hstack([U, R]), np.hstack([np.ones(len(ineq)), np.zeros(R.shape[1])])])
    b_eq = np.zeros(p.n + 1)
    b_eq[-1] = 1.0
    bounds = [(0, None)] * len(ineq) + [(None, None)] * R.shape[1]
    res = linprog(np.zeros(A_eq.shape[1]), A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
    return res.status != 0


@settings(max_examples=60)
@given(st.integers(0, 2**32 - 1))
def test_mpcc_mfcq_matches_lp_oracle(seed):
    rng = np.random.default_rng(seed)
    p = random_linear_mpcc(rng)
    holds, lam = check_mpcc_mfcq(p, np.zeros(p.n))
    assert holds == _mfcq_oracle(p)
    if not holds:
        Jg, _, JG, JH = p.jacobians(np.zeros(p.n))
        lg, _, lG, lH = p.split(lam)
        assert np.linalg.norm(lam) > 0 and np.all(lg >= -1e-12)
        np.testing.assert_allclose(Jg.T @ lg - JG.T @ lG - JH.T @ lH, 0.0, atol=1e-9)


def test_generalized_mfcq_fails_on_second_regularity_set():
    _, p2 = gallery.regularity_systems()
    holds, lam, branch = check_generalized_mfcq(p2, [0.0])
    assert not holds
    assert abs(lam[0]) < 1e-12 and abs(lam[1]) > 0


def test_generalized_mfcq_all_free():
    gamma = OrthoDisjunctiveSet.from_bounds([[(-INF, INF), (-INF, INF)]])
    p = DisjunctiveProblem(1, "x1", ("x1", "x1^2"), gamma)
    assert check_generalized_mfcq(p, [0.3])[0]


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1))
def test_licq_implies_generalized_mfcq(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    ell = int(rng.integers(1, 4))
    A = rng.integers(-2, 3, size=(ell, n)).astype(float)
    boxes = [[(lo, INF) if rng.random() < 0.5 else (-INF, 0.0) for lo in [0.0] * ell] for _ in range(int(rng.integers(1, 3)))]
    gamma = OrthoDisjunctiveSet.from_bounds(boxes)
    p = DisjunctiveProblem(n, "0", tuple(linear_text(r) for r in A), gamma)
    if check_licq(p, np.zeros(n)):
        assert check_generalized_mfcq(p, np.zeros(n))[0]


# ------------------------------------------------------ regularity witnesses


def test_am_regularity_falsified_for_first_set():
    p1, _ = gallery.regularity_systems()
    rep = regularity_witness(p1, [0.0], gallery.regularity_witness_terms(), "AM")
    assert rep.falsified
    np.testing.assert_allclose(rep.xi_limit, [1.0])


def test_as_regularity_falsified_for_second_set():
    _, p2 = gallery.regularity_systems()
    rep = regularity_witness(p2, [0.0], gallery.regularity_witness_terms(with_delta=False), "AS")
    assert rep.falsified


def test_affine_map_never_falsifies_as_regularity():
    p = gallery.licq_problem()
    rng = np.random.default_rng(3)
    for _ in range(20):
        lam = np.array([rng.uniform(-1, 1), rng.uniform(-1, 1), 0.0])
        w = [{"x": [1.0 / k, -1.0 / k], "lambda": lam} for k in range(1, 21)]
        try:
            rep = regularity_witness(p, [0.0, 0.0], w, "AS")
        except WitnessError:
            continue
        assert not rep.falsified


def test_witness_errors():
    p1, _ = gallery.regularity_systems()
    w = gallery.regularity_witness_terms(K=10)
    w[3]["delta"] = [5.0, 5.0]
    with pytest.raises(WitnessError):
        regularity_witness(p1, [0.0], w, "AM")
    stuck = [{"x": [1.0], "xi": [1.0], "delta": [1.0, -1.0]} for _ in range(10)]
    with pytest.raises(WitnessError):
        regularity_witness(p1, [0.0], stuck, "AM")
    with pytest.raises(ValueError):
        regularity_witness(p1, [0.0], w, "XX")
