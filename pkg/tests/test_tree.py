from collections import Counter

import pytest
from hypothesis import given, strategies as st

from frogcert.tree import (
    TreeParams,
    Vertex,
    ball_size,
    check_key_radius,
    enumerate_ball,
    geodesic_point,
    is_canonical,
    key_distance,
    key_level,
    max_key_radius,
    neighbors,
    pack,
    phi,
    root,
    toward_root,
    tree_distance,
    unpack,
)


@st.composite
def vertices(draw, d=None, max_u=6, max_len=8):
    d = draw(st.integers(2, 5)) if d is None else d
    u = draw(st.integers(0, max_u))
    w = draw(st.lists(st.integers(1, d), max_size=max_len))
    if u > 0 and w and w[0] == 1:
        w[0] = 2
    return d, Vertex(u, tuple(w))


def test_level_and_distance():
    v = Vertex(2, (3, 1))
    assert v.level == 0 and v.distance == 4
    assert root().level == 0 and root().distance == 0


def test_canonical_form():
    p = TreeParams(3)
    assert is_canonical(Vertex(2, (2,)), p)
    assert not is_canonical(Vertex(1, (1,)), p)
    assert not is_canonical(Vertex(0, (4,)), p)
    with pytest.raises(ValueError):
        neighbors(Vertex(1, (1,)), p)


def test_tree_params_guard():
    with pytest.raises(ValueError):
        TreeParams(1)
    with pytest.raises(ValueError):
        TreeParams(2, "binary")


@given(vertices())
def test_neighbor_structure(dv):
    d, v = dv
    p = TreeParams(d)
    nbs = neighbors(v, p)
    assert len(nbs) == d + 1 and len(set(nbs)) == d + 1
    assert nbs[0].level == v.level - 1
    assert all(x.level == v.level + 1 for x in nbs[1:])
    assert all(abs(x.distance - v.distance) == 1 for x in nbs)
    for x in nbs:
        assert is_canonical(x, p)
        assert v in neighbors(x, p)


def test_dary_root_has_no_parent():
    p = TreeParams(3, "d-ary")
    assert neighbors(root(), p) == [Vertex(0, (c,)) for c in (1, 2, 3)]
    assert ball_size(3, p) == 1 + 3 + 9 + 27 == len(enumerate_ball(3, p))


@given(vertices())
def test_toward_root_and_geodesic(dv):
    _, v = dv
    if v == root():
        assert toward_root(v) is None
        return
    assert toward_root(v).distance == v.distance - 1
    assert geodesic_point(v, v.distance) == v
    assert geodesic_point(v, v.distance - 1) == toward_root(v)
    assert tree_distance(root(), v) == v.distance


def test_tree_distance_between_branches():
    assert tree_distance(Vertex(0, (1, 2)), Vertex(0, (2,))) == 3
    assert tree_distance(Vertex(1, ()), Vertex(0, (1,))) == 2
    assert tree_distance(Vertex(2, (2,)), Vertex(1, ())) == 2


@pytest.mark.parametrize("d", [2, 3])
def test_phi_matches_enumeration(d):
    cells = Counter((v.level, v.distance) for v in enumerate_ball(7, TreeParams(d)))
    for k in range(8):
        for j in range(-k - 1, k + 2):
            assert phi(j, k, d) == cells.get((j, k), 0)


def test_phi_values():
    assert phi(0, 0, 2) == 1
    assert phi(1, 1, 2) == 2
    assert phi(-1, 1, 2) == 1
    assert phi(0, 2, 2) == 1  # the sibling of the root's spine child
    assert phi(2, 1, 2) == 0 and phi(0, 1, 2) == 0


@pytest.mark.parametrize("d,R", [(2, 6), (3, 4), (5, 3)])
def test_ball_size(d, R):
    assert ball_size(R, TreeParams(d)) == len(enumerate_ball(R, TreeParams(d)))


def test_ball_guard():
    with pytest.raises(ValueError):
        enumerate_ball(40, TreeParams(2))
    with pytest.raises(ValueError):
        enumerate_ball(-1, TreeParams(2))


@given(vertices(max_u=20, max_len=20))
def test_pack_roundtrip(dv):
    d, v = dv
    if v.distance > max_key_radius(d):
        return
    k = pack(v, d)
    assert unpack(k, d) == v
    assert key_level(k) == v.level and key_distance(k) == v.distance


def test_key_radius_limits():
    assert max_key_radius(2) == 52
    assert max_key_radius(6) == 20
    check_key_radius(52, 2)
    with pytest.raises(ValueError):
        check_key_radius(53, 2)


def test_pack_is_injective_on_ball():
    p = TreeParams(3)
    ball = enumerate_ball(5, p)
    assert len({pack(v, 3) for v in ball}) == len(ball)
