# -*- coding: utf-8 -*-
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import linregress

from boundary import (
    BoundaryPoint,
    BoundarySpec,
    ConstantsReport,
    VisualMetricParams,
    calibrate_constants,
    check_separation,
    cone,
    cone_growth_audit,
    descendants,
    ps_shadow_scaling,
    ps_weight,
    sample_boundary_points,
    sandwich_holds,
    separating_set,
    shadow_membership,
    shadows_disjoint,
    truncated_cone_neighborhood,
    visual_ball,
    visual_distance,
)
from cayley import GroupSpec, build_ball

H_F2 = math.log(3)


@pytest.fixture(scope="module")
def f2_constants(f2_ball8):
    return calibrate_constants(f2_ball8.restrict(6))


def test_boundary_point(f2):
    xi = BoundaryPoint.parse(f2, "", "a")
    assert xi.ray(3) == (0, 0, 0)
    assert xi.same_point(BoundaryPoint.parse(f2, "a", "a"))
    assert not xi.same_point(BoundaryPoint.parse(f2, "a", "b"))
    with pytest.raises(ValueError):
        BoundaryPoint.parse(f2, "", "aA")
    with pytest.raises(ValueError):
        BoundaryPoint.parse(f2, "a", "")


def test_boundary_spec_rejects_trivial_phases(f2):
    with pytest.raises(ValueError):
        BoundarySpec.parse(f2, [])
    with pytest.raises(ValueError):
        BoundarySpec.parse(f2, ["a", "A", "b", "B"])
    with pytest.raises(ValueError):
        BoundarySpec.parse(f2, ["A", "b", "B", "aa", "ab", "aB"])


def test_boundary_spec_complement(f2):
    D0 = BoundarySpec.parse(f2, ["a", "aa"])
    assert D0.prefixes == [(0,)]
    assert sorted(f2.format(c.prefix) for c in D0.complement()) == ["A", "B", "b"]
    two = BoundarySpec.parse(f2, ["aa", "bb"])
    assert len(two.complement()) == 7
    assert two.contains(BoundaryPoint.parse(f2, "", "a"))
    assert not two.contains(BoundaryPoint.parse(f2, "", "ab"))


def test_small_dimension_rejected():
    with pytest.raises(ValueError):
        VisualMetricParams(5.0, H_F2)
    assert VisualMetricParams(H_F2 / 2, H_F2).D == pytest.approx(2.0)


def test_visual_distance(f2):
    params = VisualMetricParams(H_F2 / 2, H_F2)
    x = BoundaryPoint.parse(f2, "", "a")
    assert visual_distance(x, BoundaryPoint.parse(f2, "", "b"), params) == 1.0
    assert visual_distance(x, BoundaryPoint.parse(f2, "a", "b"), params) == pytest.approx(
        math.exp(-params.epsilon)
    )
    assert visual_distance(x, BoundaryPoint.parse(f2, "aa", "a"), params) == 0.0


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_visual_distance_is_ultrametric(seed):
    spec = GroupSpec.free_group(2)
    params = VisualMetricParams(H_F2 / 2, H_F2)
    x, y, z = sample_boundary_points(spec, 3, np.random.default_rng(seed))
    dxy = visual_distance(x, y, params)
    assert dxy <= max(visual_distance(x, z, params), visual_distance(z, y, params)) + 1e-15
    assert dxy == visual_distance(y, x, params)


def test_visual_ball(f2):
    params = VisualMetricParams(H_F2 / 2, H_F2)
    xi0 = BoundaryPoint.parse(f2, "", "a")
    assert [c.prefix for c in visual_ball(xi0, 0.5, params, f2)] == [(0, 0)]
    assert len(visual_ball(xi0, 1.0, params, f2)) == 4


def test_cone_of_cylinder(f2_ball3, f2):
    mask = cone(f2_ball3, BoundarySpec.parse(f2, ["a"]))
    assert mask.sum() == 13
    assert all(f2_ball3.words[i][0] == 0 for i in np.flatnonzero(mask))
    assert not cone(f2_ball3, BoundaryPoint.parse(f2, "", "a")).any()


def test_cone_with_shadow_radius(z2z3, z2z3_ball):
    D0 = BoundarySpec.parse(z2z3, ["a"])
    thick = cone(z2z3_ball, D0)
    thin = cone(z2z3_ball, D0, R=0)
    assert not np.any(thick & ~thin)
    assert thick.any()
    assert not thick[0]


def test_shadows(f2):
    xi = BoundaryPoint.parse(f2, "", "a")
    assert shadow_membership(f2, xi, (0, 0), 0)
    assert not shadow_membership(f2, xi, (2,), 0)
    assert shadow_membership(f2, xi, (2,), 1)
    assert shadows_disjoint(f2, (0, 2), (0, 3))
    assert not shadows_disjoint(f2, (0,), (0, 2))


def test_tree_constants(f2_constants):
    c = f2_constants
    eps = H_F2 / 2
    assert c.R == 0
    assert c.C1 == pytest.approx(4 / 3)
    assert c.C2 == c.C4 == 1.0
    assert c.C_tilde == pytest.approx(2.0)
    assert c.k0 == pytest.approx(1 / (2 * math.log(2)))
    assert c.k1 == pytest.approx(math.exp(-eps) / 4)
    assert c.D == pytest.approx(2.0)
    assert c.provenance["C1"] == "closed_form"
    assert c.provenance["C5"] == "calibrated"
    assert ConstantsReport.from_json(c.to_json()) == c
    assert json.loads(c.to_json())["R"] == 0


def test_calibrated_constants(z2z3_ball):
    c = calibrate_constants(z2z3_ball.restrict(8), samples=50)
    assert c.R == 2
    assert c.provenance["h"] == "calibrated"
    assert c.provenance["C_tilde"] == "calibrated"
    assert c.C1 >= 2.0 and c.C_tilde >= 2.0


def test_separating_set(f2, f2_ball8, f2_constants):
    xi0 = BoundaryPoint.parse(f2, "", "a")
    sep = separating_set(f2_ball8, xi0, 0.5, 4, f2_constants)
    assert not sep.degenerate
    assert not np.any(sep.sites & f2_ball8.ball_mask(4))
    inner = cone(f2_ball8, BoundarySpec.parse(f2, ["aa"]))
    outer = cone(f2_ball8, BoundarySpec.parse(f2, ["a"]))
    assert check_separation(f2_ball8, sep, inner, outer).passed
    assert separating_set(f2_ball8, xi0, 0.5, 8, f2_constants).degenerate


def test_truncated_cone_sandwich(f2, f2_ball8, f2_constants):
    xi0 = BoundaryPoint.parse(f2, "", "a")
    tc = truncated_cone_neighborhood(f2_ball8, xi0, 0.5, f2_constants)
    assert tc.n == 1
    assert tc.sites.sum() == sum(3**k for k in range(7))
    assert sandwich_holds(f2_ball8, tc, xi0, f2_constants.params)


def test_cone_growth(f2, f2_ball8):
    audit = cone_growth_audit(f2_ball8, BoundarySpec.parse(f2, ["a"]))
    assert audit.counts[:4] == [0, 1, 3, 9]
    assert audit.slope == pytest.approx(H_F2)
    assert not audit.emptied
    with pytest.raises(ValueError):
        cone_growth_audit(f2_ball8.restrict(4), BoundarySpec.parse(f2, ["a"]))


def test_patterson_sullivan(f2_ball3, f2_ball8):
    with pytest.raises(ValueError):
        ps_weight(f2_ball3, H_F2, f2_ball3.ball_mask(1), H_F2)
    assert ps_weight(f2_ball3, 2.0, np.ones(f2_ball3.size, dtype=bool), H_F2) == pytest.approx(1.0)
    assert descendants(f2_ball3, 1).sum() == 13


def test_shadow_scaling_depth(f2_ball8):
    # far above h the tails are short enough for the e^{-s|g|} law
    steep = ps_shadow_scaling(f2_ball8, 2.0, H_F2)
    assert steep.slope == pytest.approx(-2.0, abs=0.01)
    assert steep.slope < -2.0
    assert steep.passed
    # close to h the shadows reaching the rim are cut short and the slope bends past -s
    s = 1.02 * H_F2
    q = math.exp(H_F2 - s)
    depths = np.arange(1, 5)
    expected = linregress(depths, -s * depths + np.log1p(-(q ** (9 - depths)))).slope
    shallow = ps_shadow_scaling(f2_ball8, s, H_F2)
    assert shallow.slope == pytest.approx(expected, rel=1e-9)
    assert shallow.slope < -s - 0.1
    assert not shallow.passed
    with pytest.raises(ValueError):
        ps_shadow_scaling(f2_ball8, s, H_F2, depths=[3])


def test_sample_boundary_points(f2):
    points = sample_boundary_points(f2, 20, np.random.default_rng(1))
    assert len(points) == 20
    for p in points:
        assert f2.is_reduced(p.ray(len(p.preperiod) + 3 * len(p.period)))


def test_build_ball_for_offsets(z2z3):
    # shadow offsets come from B_R with R = ceil(2 * (delta + 1))
    assert build_ball(z2z3, z2z3.shadow_radius).size == 8
