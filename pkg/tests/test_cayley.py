# -*- coding: utf-8 -*-
import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cayley import (
    BallTooLargeError,
    GroupSpec,
    RimError,
    boundary_in,
    boundary_out,
    build_ball,
    distance,
    entropy_estimate,
    geodesic,
    growth_constant,
    inner_set,
    isoperimetric_audit,
    outer_set,
    sphere_sizes,
    triangle_slimness,
    write_edge_list,
    write_metadata,
)

f2_words = st.lists(st.integers(0, 3), max_size=12)
z2z3_words = st.lists(st.integers(0, 2), max_size=12)


def test_elementary_groups_rejected():
    with pytest.raises(ValueError):
        GroupSpec.free_group(1)
    with pytest.raises(ValueError):
        GroupSpec.free_product([2, 2])
    with pytest.raises(ValueError):
        GroupSpec.free_product([2])


def test_generators(f2, z2z3):
    assert f2.generators == ("a", "A", "b", "B")
    assert z2z3.generators == ("a", "b", "B")
    assert z2z3.inverse_letter == (0, 2, 1)
    assert f2.is_tree and not z2z3.is_tree
    assert GroupSpec.free_product([2, 2, 2]).is_tree


def test_hyperbolicity_constants(f2, z2z3):
    assert f2.delta == 0.0
    assert f2.shadow_radius == 0
    # triangles of a 3-cycle are degenerate
    assert z2z3.delta == 0.0
    assert z2z3.shadow_radius == 2
    assert GroupSpec.free_product([2, 5]).delta >= 1.0


def test_normal_form(f2, z2z3):
    assert f2.parse("aA") == ()
    assert f2.format(f2.parse("abBa")) == "aa"
    assert z2z3.format(z2z3.parse("aa")) == "id"
    assert z2z3.format(z2z3.parse("bb")) == "B"
    assert z2z3.format(z2z3.parse("abbb")) == "a"
    with pytest.raises(ValueError):
        f2.parse("c")


@given(f2_words, f2_words)
def test_multiplication_is_normal(left, right):
    spec = GroupSpec.free_group(2)
    g = spec.normal_form(left)
    h = spec.multiply(g, right)
    assert spec.is_reduced(h)
    assert h == spec.normal_form(tuple(left) + tuple(right))
    assert spec.multiply(h, spec.inverse(spec.normal_form(right))) == g


@given(st.lists(st.integers(0, 2), max_size=15))
def test_inverse_z2z3(word):
    spec = GroupSpec.free_product([2, 3])
    g = spec.normal_form(word)
    assert spec.multiply(g, spec.inverse(g)) == ()


def test_ball_sizes(f2, f2_ball3, f2_ball5):
    assert f2_ball3.size == 53
    assert f2_ball5.size == 485
    assert sphere_sizes(f2_ball5) == [1, 4, 12, 36, 108, 324]
    assert build_ball(f2, 6).sphere_offsets[7] - build_ball(f2, 6).sphere_offsets[6] == 972
    assert f2.predicted_ball_size(5) == 485


def test_ball_sorted_and_prefix(f2_ball5, f2_ball3):
    assert np.all(np.diff(f2_ball5.lengths) >= 0)
    assert f2_ball5.words[: f2_ball3.size] == f2_ball3.words
    small = f2_ball5.restrict(3)
    np.testing.assert_array_equal(small.adjacency, f2_ball3.adjacency)


def test_adjacency_is_symmetric(z2z3_ball):
    ball = z2z3_ball
    src, dst = ball.edges
    pairs = set(zip(src.tolist(), dst.tolist()))
    assert all((v, u) in pairs for u, v in pairs)


def test_cap(f2):
    with pytest.raises(BallTooLargeError):
        build_ball(f2, 6, memory_cap=100)


def test_entropy(f2_ball8, z2z3_ball):
    est = entropy_estimate(f2_ball8)
    assert est.slope == pytest.approx(math.log(3), abs=1e-2)
    assert est.closed_form == pytest.approx(math.log(3))
    assert growth_constant(f2_ball8, math.log(3)) < 3.0
    other = entropy_estimate(z2z3_ball)
    assert other.closed_form is None
    # spheres of Z/2 * Z/3 double every two steps
    assert other.slope == pytest.approx(math.log(2) / 2, rel=0.15)


def test_entropy_needs_radius(f2):
    with pytest.raises(ValueError):
        entropy_estimate(build_ball(f2, 2))


def test_set_boundaries(f2_ball3):
    ball = f2_ball3
    A = ball.ball_mask(1)
    assert outer_set(ball, A).sum() == 17
    assert boundary_out(ball, A).sum() == 12
    assert inner_set(ball, A).sum() == 1
    assert boundary_in(ball, A).sum() == 4
    with pytest.raises(RimError):
        outer_set(ball, ball.ball_mask(3))
    assert outer_set(ball, ball.ball_mask(3), allow_rim=True).all()


def test_boundary_of_intersection(f2_ball8):
    ball = f2_ball8
    inside = ball.ball_mask(6)
    rng = np.random.default_rng(2)
    for _ in range(1000):
        A = inside & (rng.random(ball.size) < rng.uniform(0.05, 0.95))
        D = inside & (rng.random(ball.size) < rng.uniform(0.05, 0.95))
        outer_A, outer_D = outer_set(ball, A), outer_set(ball, D)
        cross = (boundary_out(ball, A) & outer_D) | (outer_A & boundary_out(ball, D))
        assert not np.any(boundary_out(ball, A & D) & ~cross)
        np.testing.assert_array_equal(cross, outer_A & outer_D & ~(A & D))


def test_boundary_of_intersection_can_be_strict(f2, f2_ball3):
    ball = f2_ball3
    A, D = ball.empty(), ball.empty()
    A[ball.index_of(f2.parse("a"))] = True
    D[ball.index_of(f2.parse("b"))] = True
    cross = (boundary_out(ball, A) & outer_set(ball, D)) | (
        outer_set(ball, A) & boundary_out(ball, D)
    )
    assert not boundary_out(ball, A & D).any()
    assert np.flatnonzero(cross).tolist() == [0]


def test_f2_sphere_sizes_to_radius_12(f2):
    ball = build_ball(f2, 12)
    assert sphere_sizes(ball) == [1] + [4 * 3 ** (n - 1) for n in range(1, 13)]
    assert ball.size == 1 + 2 * (3**12 - 1)


def test_isoperimetric(f2_ball5):
    res = isoperimetric_audit(f2_ball5, f2_ball5.ball_mask(2))
    assert res.size == 17
    assert res.boundary_size == 36
    assert res.ratio == pytest.approx(17 / math.log(17) / 36)


def test_geodesic(f2):
    a, b = f2.parse("a"), f2.parse("b")
    assert [e.word for e in geodesic(f2, a, b)] == [a, (), b]
    assert distance(f2, f2.parse("ab"), f2.parse("aB")) == 2


@settings(deadline=None)
@given(f2_words, f2_words, f2_words)
def test_tree_metric(x, y, z):
    spec = GroupSpec.free_group(2)
    g, h, k = (spec.normal_form(w) for w in (x, y, z))
    assert distance(spec, g, h) == distance(spec, h, g)
    assert distance(spec, g, k) <= distance(spec, g, h) + distance(spec, h, k)
    path = [e.word for e in geodesic(spec, g, h)]
    assert path[0] == g and path[-1] == h
    assert len(path) == distance(spec, g, h) + 1
    assert all(distance(spec, p, q) == 1 for p, q in zip(path, path[1:]))
    # geodesics in a tree are unique
    assert path[::-1] == [e.word for e in geodesic(spec, h, g)]
    assert triangle_slimness(spec, g, h, k) == 0


@settings(deadline=None)
@given(z2z3_words, z2z3_words, z2z3_words)
def test_free_product_metric(x, y, z):
    spec = GroupSpec.free_product([2, 3])
    g, h, k = (spec.normal_form(w) for w in (x, y, z))
    assert distance(spec, g, h) == distance(spec, h, g)
    assert distance(spec, g, k) <= distance(spec, g, h) + distance(spec, h, k)
    path = [e.word for e in geodesic(spec, g, h)]
    assert len(path) == distance(spec, g, h) + 1
    assert all(distance(spec, p, q) == 1 for p, q in zip(path, path[1:]))


def test_triangle_slimness(f2, z2z3):
    assert triangle_slimness(f2, (), f2.parse("ab"), f2.parse("aB")) == 0
    assert triangle_slimness(z2z3, (), z2z3.parse("b"), z2z3.parse("B")) <= z2z3.delta


def test_components_match_networkx(f2_ball3):
    ball = f2_ball3
    mask = ball.sphere_mask(0) | ball.sphere_mask(2)
    count, labels = ball.components(mask)
    expected = nx.number_connected_components(ball.graph().subgraph(np.flatnonzero(mask).tolist()))
    assert count == expected == 13
    assert np.all(labels[~mask] == -1)


def test_distance_from(f2_ball3):
    dist = f2_ball3.distance_from(f2_ball3.sphere_mask(0))
    np.testing.assert_array_equal(dist, f2_ball3.lengths)


def test_exports(tmp_path, f2_ball3):
    write_edge_list(f2_ball3, str(tmp_path / "edges.txt"))
    write_metadata(f2_ball3, str(tmp_path / "ball.json"))
    lines = (tmp_path / "edges.txt").read_text().splitlines()
    assert len(lines) == 52
    assert '"radius": 3' in (tmp_path / "ball.json").read_text()
