import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dsk import (
    OrthoDisjunctiveSet,
    SignCone,
    SignConeUnion,
    SignConstraint,
    TooLargeError,
    cone_membership,
    limiting_normal_cone,
    membership,
    regular_normal_cone,
)
from dsk.cones import component_regular_cone

import oracles

INF = math.inf
NON_SAS = [
    [(-INF, 0), (0, 0), (0, INF), (-INF, INF)],
    [(-INF, 0), (0, INF), (0, 0), (-INF, 0)],
]
LICQ = [[(-INF, 0), (0, 0), (0, INF)], [(-INF, 0), (0, INF), (0, 0)]]
HALF_PLANES = [[(0, INF), (-INF, INF)], [(-INF, INF), (0, INF)]]


def gset(b):
    return OrthoDisjunctiveSet.from_bounds(b)


def lib_union(u):
    return frozenset(oracles.from_text(str(c)) for c in u)


def test_regular_cone_examples():
    assert regular_normal_cone(gset(NON_SAS), [0, 0, 0, 0]) == SignCone.parse("R+ x R- x R- x {0}")
    assert regular_normal_cone(gset(LICQ), [0, 0, 0]) == SignCone.parse("R+ x R- x R-")
    assert regular_normal_cone(gset(HALF_PLANES), [0, 0]) == SignCone.parse("{0} x {0}")


def test_limiting_cone_of_two_box_example():
    lim = limiting_normal_cone(gset(NON_SAS), [0, 0, 0, 0])
    # at (0, 0, 0, t) with t > 0 only the first box is active and contributes
    # R+ x R x R- x {0}, which absorbs two of the three commonly listed cones
    assert lim.as_set() == {
        SignCone.parse("R+ x R x R- x {0}").constraints,
        SignCone.parse("R+ x {0} x R x R+").constraints,
    }
    assert lib_union(lim) == oracles.limiting_cone_oracle(NON_SAS, [0, 0, 0, 0])
    for text in ("R+ x R x {0} x {0}", "R+ x {0} x R x R+", "R+ x R- x R- x {0}"):
        assert lim.includes(SignCone.parse(text))


def test_limiting_cone_off_the_corner():
    k = 3.0
    lim = limiting_normal_cone(gset(HALF_PLANES), [0, -1 / k**2])
    assert lim.as_set() == {SignCone.parse("R- x {0}").constraints}


def test_single_box_limiting_equals_regular():
    g = gset([[(0, 1), (-INF, 0), (2, 2)]])
    y = [0, 0, 2]
    assert limiting_normal_cone(g, y).cones == (regular_normal_cone(g, y),)


def test_cone_membership_examples():
    c = SignCone.parse("R+ x R- x R-")
    assert cone_membership(c, [0, -1, 0])
    assert cone_membership(c, [0, 0, 0])
    assert not cone_membership(SignCone.parse("{0} x {0}"), [1, 1], 1e-8)
    assert cone_membership(SignCone.parse("{0} x {0}"), [1e-9, -1e-9], 1e-8)
    u = limiting_normal_cone(gset(NON_SAS), [0, 0, 0, 0])
    assert cone_membership(u, [1, 5, 0, 0]) and not cone_membership(u, [1, 1, 1, 0])


def test_span_sum_coordinates():
    assert membership(gset(LICQ), [0, 0, 0]).I_exists == {0, 1, 2}
    assert membership(gset([[(-INF, INF)] * 2]), [1, 2]).I_exists == frozenset()


def test_parse_and_render():
    c = SignCone.parse("R+ x R- x {0} x R")
    assert str(c) == "R+ x R- x {0} x R"
    assert SignConstraint.parse("R_+") is SignConstraint.NONNEG
    with pytest.raises(ValueError):
        SignConstraint.parse("Q")


def test_lattice():
    Z, NP, NN, FR = SignConstraint.ZERO, SignConstraint.NONPOS, SignConstraint.NONNEG, SignConstraint.FREE
    assert FR.includes(NN) and NN.includes(Z) and not NN.includes(NP)
    assert NN.meet(NP) is Z and FR.meet(NP) is NP


def test_union_pruning():
    u = SignConeUnion((SignCone.parse("R+ x {0}"), SignCone.parse("R x {0}"), SignCone.parse("R x {0}")))
    assert len(u) == 1


def test_pattern_cap():
    g = gset([[(0, 1)] * 5])
    with pytest.raises(TooLargeError):
        limiting_normal_cone(g, [0] * 5, cap=3**4)


seeds = st.integers(0, 2**32 - 1)


def _instance(seed, ell=None, t=None):
    rng = np.random.default_rng(seed)
    ell = ell or int(rng.integers(1, 5))
    t = t or int(rng.integers(1, 4))
    bounds = oracles.random_bounds(rng, ell, t)
    return rng, bounds, oracles.random_member(rng, bounds)


@given(seeds)
def test_regular_cone_matches_intersection_rule(seed):
    _, bounds, y = _instance(seed)
    got = oracles.from_text(str(regular_normal_cone(gset(bounds), y)))
    assert got == oracles.regular_cone_oracle(bounds, y)


@given(seeds)
def test_limiting_cone_matches_nearby_points(seed):
    _, bounds, y = _instance(seed)
    assert lib_union(limiting_normal_cone(gset(bounds), y)) == oracles.limiting_cone_oracle(bounds, y)


@given(seeds)
def test_limiting_inside_union_of_component_cones(seed):
    _, bounds, y = _instance(seed)
    g = gset(bounds)
    J = membership(g, y).J
    comps = [component_regular_cone(g, j, y) for j in J]
    for j, c in zip(sorted(J), [component_regular_cone(g, j, y) for j in sorted(J)]):
        assert oracles.from_text(str(c)) == oracles.component_cone_oracle(bounds, j, y)
    for cone in limiting_normal_cone(g, y):
        assert any(c.includes(cone) for c in comps)


@given(seeds)
def test_regular_inside_limiting_and_support(seed):
    rng, bounds, y = _instance(seed)
    g = gset(bounds)
    reg = regular_normal_cone(g, y)
    lim = limiting_normal_cone(g, y)
    exists = membership(g, y).I_exists
    assert lim.includes(reg)
    for _ in range(20):
        assert lim.contains(reg.sample(rng))
    for cone in lim:
        lam = cone.sample(rng)
        assert {i for i, v in enumerate(lam) if v != 0} <= exists
