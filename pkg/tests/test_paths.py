import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from valgeo.deviations import Deviation, join_deviation, meet_deviation
from valgeo.geometry import (EMPTY, GeometryError, ball_approx, bodies_equal, box, hull_union,
                             intersect, interpolate, segment)
from valgeo.paths import (Path, Segment, backward_case, bridging_certificate, build_bridge_path,
                          build_bridging_geodesic, build_join_path, build_meet_path,
                          build_thickened_path, extrapolate_linear, find_bridging_body,
                          halving_sequence, monotone_segment_length, partition_sum, path_length,
                          segment_length, spheropolyhedron, thickened_length, thm1_lower_bound)
from valgeo.sampling import random_body, random_nested_pair, random_pair
from valgeo.valuations import (MixedAreaMeasure2D, intrinsic_volume_valuation, volume,
                               volume_valuation)

VOL = volume_valuation(2)
V1 = intrinsic_volume_valuation(1, 2)
MEET_VOL, JOIN_VOL = Deviation("meet", VOL), Deviation("join", VOL)
MEET_V1, JOIN_V1 = Deviation("meet", V1), Deviation("join", V1)
SQ, SQ2 = box([0, 0], [1, 1]), box([0, 0], [2, 2])
seeds = st.integers(0, 2**32 - 1)


def disc(x, m=64):
    return ball_approx([x, 0], 1.0, m)


# -- segments ------------------------------------------------------------------------

def test_segment_endpoints_and_flag():
    seg = Segment(SQ, SQ2)
    assert seg.monotone_flag and not seg.is_constant
    assert bodies_equal(seg.at(0), SQ) and bodies_equal(seg.at(1), SQ2)
    assert bodies_equal(seg.at(0.5), box([0, 0], [1.5, 1.5]))
    assert not Segment(SQ, SQ.translate([0.5, 0])).monotone_flag


def test_nested_segment_length():
    est = segment_length(Segment(SQ, SQ2), MEET_VOL)
    assert est.value == pytest.approx(3.0) and est.converged


def test_constant_segment_has_zero_length():
    for dev in (MEET_VOL, JOIN_V1):
        assert segment_length(Segment(SQ, SQ), dev).value == 0.0


@pytest.mark.parametrize("depth", range(0, 8))
def test_telescoping_every_depth(depth):
    assert partition_sum(Segment(SQ, SQ2), MEET_VOL, depth) == pytest.approx(3.0, abs=1e-7)


def test_monotone_closed_forms():
    assert monotone_segment_length(Segment(SQ, SQ2), VOL) == 3.0
    assert monotone_segment_length(Segment(SQ, SQ), V1) == 0.0
    assert monotone_segment_length(Segment(SQ, SQ2), V1) == pytest.approx(2.0)
    with pytest.raises(GeometryError, match="non-nested"):
        monotone_segment_length(Segment(SQ, SQ.translate([2, 0])), VOL)


@settings(max_examples=15, deadline=None)
@given(seeds, st.integers(0, 5))
def test_join_length_exact_at_every_depth(seed, depth):
    # rho(K_t, K_s) = |t - s| rho(K, L) makes every partition sum exact
    k, l = random_pair(np.random.default_rng(seed), 2)
    rho = join_deviation(V1, k, l)
    assert partition_sum(Segment(k, l), JOIN_V1, depth) == pytest.approx(rho, abs=1e-8)


@settings(max_examples=30, deadline=None)
@given(seeds, st.floats(0, 1), st.floats(0, 1))
def test_join_interpolation_identity(seed, t, s):
    k, l = random_pair(np.random.default_rng(seed), 2)
    got = join_deviation(V1, interpolate(k, l, t), interpolate(k, l, s))
    assert abs(got - abs(t - s) * join_deviation(V1, k, l)) <= 1e-8


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_telescoping_on_monotone_chains(seed):
    rng = np.random.default_rng(seed)
    inner, outer = random_nested_pair(rng, 2)
    mid = interpolate(inner, outer, 0.4)
    chain = Path.from_bodies([inner, mid, outer, mid])
    want = sum(abs(VOL(a) - VOL(b)) for a, b in zip(chain.bodies, chain.bodies[1:]))
    for seg in chain.segments:
        for d in range(4):
            assert partition_sum(seg, MEET_VOL, d) == pytest.approx(monotone_segment_length(seg, VOL),
                                                                    abs=1e-7)
    assert path_length(chain, MEET_VOL).value == pytest.approx(want, abs=1e-7)


def test_unconverged_flagged():
    est = segment_length(Segment(disc(0), disc(3)), MEET_V1, max_depth=2)
    assert not est.converged and est.refinement_depth == 2 and len(est.history) == 3


def test_translation_length_converges_to_v1_gap_bound():
    # moving a disc rigidly: partition sums never drop below 2t once consecutive bodies overlap
    est = segment_length(Segment(disc(0), disc(4)), MEET_V1, max_depth=10)
    assert est.value >= 8.0 - 1e-9


# -- paths ----------------------------------------------------------------------------

def test_path_validation():
    with pytest.raises(GeometryError):
        Path([])
    with pytest.raises(GeometryError, match="share an endpoint"):
        Path([Segment(SQ, SQ2), Segment(SQ, SQ2)])
    with pytest.raises(GeometryError, match="increasing"):
        Path.from_bodies([SQ, SQ2], breakpoints=[1, 1])
    with pytest.raises(GeometryError):
        Path.from_bodies([SQ])
    with pytest.raises(GeometryError):
        build_join_path(SQ, SQ2)(3.0)


def test_path_evaluation():
    p = Path.from_bodies([SQ, SQ2, SQ], breakpoints=[0, 0.5, 2])
    assert bodies_equal(p(0.5), SQ2)
    assert bodies_equal(p(0.25), box([0, 0], [1.5, 1.5]))
    assert bodies_equal(p(2), SQ)


def test_path_json_roundtrip():
    p = Path.from_bodies([SQ, SQ2, disc(1)], breakpoints=[0, 1, 3])
    q = Path.from_json(json.loads(json.dumps(p.to_json())))
    assert all(bodies_equal(a, b) for a, b in zip(p.bodies, q.bodies))
    assert np.array_equal(p.breakpoints, q.breakpoints)
    with pytest.raises(GeometryError):
        Path.from_json({"segments": []})


@settings(max_examples=10, deadline=None)
@given(seeds, st.lists(st.floats(0.01, 1.99), min_size=1, max_size=3))
def test_length_invariant_under_refinement(seed, points):
    k, l = random_pair(np.random.default_rng(seed), 2)
    p = build_join_path(k, l)
    base = path_length(p, MEET_V1).value
    assert path_length(p.refine(points), MEET_V1).value == pytest.approx(base, abs=1e-7)


@settings(max_examples=10, deadline=None)
@given(seeds, st.floats(-5, 5), st.floats(0.1, 10))
def test_length_invariant_under_reparametrization(seed, a, width):
    k, l = random_pair(np.random.default_rng(seed), 2)
    p = build_join_path(k, l)
    q = p.reparametrize(a, a + width)
    assert q.breakpoints[0] == a
    assert path_length(q, MEET_V1).value == path_length(p, MEET_V1).value
    assert bodies_equal(q(a + width / 4), p(0.5))


def test_concat_lengths_add():
    p, q = Path.from_bodies([SQ, SQ2]), Path.from_bodies([SQ2, box([0, 0], [3, 3])])
    both = p.concat(q)
    assert np.array_equal(both.breakpoints, [0, 1, 2])
    assert path_length(both, MEET_VOL).value == pytest.approx(
        path_length(p, MEET_VOL).value + path_length(q, MEET_VOL).value)


def test_refine_ignores_existing_and_outside_points():
    p = build_join_path(SQ, SQ2.translate([3, 0]))
    assert len(p.refine([0, 1, 2, 5, -1]).segments) == 2


# -- builders ------------------------------------------------------------------------

@settings(max_examples=20, deadline=None)
@given(seeds)
def test_join_path_length_is_rho(seed):
    k, l = random_pair(np.random.default_rng(seed), 2)
    for phi in (VOL, V1):
        got = path_length(build_join_path(k, l), Deviation("meet", phi)).value
        assert got == pytest.approx(join_deviation(phi, k, l), abs=1e-7)


def test_meet_path_examples():
    k, l = SQ, box([0.5, 0], [1.5, 1])
    assert path_length(build_meet_path(k, l), MEET_VOL).value == pytest.approx(1.0)
    assert path_length(build_meet_path(k, k), MEET_VOL).value == 0.0
    c1, c2 = box([0, 0, 0], [1, 1, 1]), box([0.3, 0.2, 0.1], [1.3, 1.2, 1.1])
    v2 = intrinsic_volume_valuation(2, 3)
    got = path_length(build_meet_path(c1, c2), Deviation("meet", v2)).value
    assert got == pytest.approx(meet_deviation(v2, c1, c2), abs=1e-6)


def test_meet_path_needs_full_dimensional_meet():
    with pytest.raises(GeometryError, match="build_thickened_path"):
        build_meet_path(SQ, box([1, 0], [2, 1]))
    with pytest.raises(GeometryError):
        build_meet_path(SQ, SQ.translate([3, 0]))


def test_thickened_path_decreases_to_delta():
    k, l = box([0, 0], [1, 1]), box([1, 0], [2, 1])
    lengths = [thickened_length(VOL, k, l, d) for d in (0.2, 0.1, 0.05)]
    assert lengths[0] > lengths[1] > lengths[2] > meet_deviation(VOL, k, l)


def test_thickened_closed_form_matches_partition_length():
    k, l = box([0, 0], [1, 1]), box([1, 0], [2, 1])
    p = build_thickened_path(k, l, 0.1)
    assert len(p.segments) == 4
    assert path_length(p, MEET_VOL).value == pytest.approx(thickened_length(VOL, k, l, 0.1), abs=1e-9)


def test_thickened_limit_matches_meet_path():
    k, l = SQ, box([0.5, 0], [1.5, 1])
    meet_len = path_length(build_meet_path(k, l), MEET_VOL).value
    assert thickened_length(VOL, k, l, 1e-3) == pytest.approx(meet_len, abs=1e-2)


def test_thickened_degenerate_and_errors():
    d = 0.1
    grown = volume(build_thickened_path(SQ, SQ, d).bodies[2])
    assert thickened_length(VOL, SQ, SQ, d) <= 2 * (grown - 1.0) + 1e-12
    with pytest.raises(GeometryError):
        build_thickened_path(SQ, SQ.translate([3, 0]), 0.1)
    with pytest.raises(GeometryError):
        build_thickened_path(SQ, SQ, 0.0)


def test_spheropolyhedron_examples():
    h = spheropolyhedron([0, 0], [1, 0], 0.1)
    assert h.volume == pytest.approx(0.2 + math.pi * 0.01, abs=1e-3)
    assert h.volume < 0.2 + math.pi * 0.01
    assert bodies_equal(spheropolyhedron([1, 1], [1, 1], 0.3), ball_approx([1, 1], 0.3, 64))
    areas = [spheropolyhedron([0, 0], [1, 0], r).volume for r in (0.1, 0.05, 0.025)]
    assert max(a / r for a, r in zip(areas, (0.1, 0.05, 0.025))) <= 2.4
    with pytest.raises(GeometryError):
        spheropolyhedron([0, 0], [1, 0], 0.0)


def test_bridge_path_bound_and_decay():
    k, l = SQ, SQ.translate([2, 0])
    delta = meet_deviation(VOL, k, l)
    excess = []
    for r in (0.1, 0.05, 0.025):
        p = build_bridge_path(k, l, r)
        h = p.bodies[2]
        length = path_length(p, MEET_VOL).value
        assert length <= delta + 2 * h.volume + 1e-9
        assert length <= delta + 2 * (2 * r * 2 + math.pi * r * r) + 1e-9
        excess.append(length - delta)
    assert excess[1] / excess[0] == pytest.approx(0.5, abs=0.1)
    assert excess[2] / excess[1] == pytest.approx(0.5, abs=0.1)


def test_bridge_touching_squares():
    k, l = SQ, box([1, 0], [2, 1])
    p = build_bridge_path(k, l, 0.05)
    assert path_length(p, MEET_VOL).value <= meet_deviation(VOL, k, l) + 2 * p.bodies[2].volume + 1e-9


def test_bridge_degenerate_raises():
    k = segment([0, 0], [1, 0])
    with pytest.raises(GeometryError):
        build_bridge_path(k, SQ.translate([3, 0]), 0.1)


def test_backward_case_dispatch():
    assert backward_case(VOL, SQ, box([0.5, 0], [1.5, 1])) == "i"
    assert backward_case(VOL, SQ, box([1, 0], [2, 1])) == "iii"
    assert backward_case(V1, SQ, box([1, 0], [2, 1])) == "ii"
    assert backward_case(VOL, SQ, SQ.translate([3, 0])) == "iii"
    cube = box([0, 0, 0], [1, 1, 1])
    v2 = intrinsic_volume_valuation(2, 3)
    assert backward_case(v2, cube, cube.translate([1, 0, 0])) == "ii"


def test_halving_and_extrapolation():
    seq = halving_sequence()
    assert seq[0] == 0.2 and len(seq) == 7 and seq[-1] == pytest.approx(0.2 / 64)
    assert extrapolate_linear([3 + 2 * h for h in seq]) == pytest.approx(3.0)


# -- bridging bodies ----------------------------------------------------------------------

def test_bridging_overlapping_returns_k():
    k, l = SQ, box([0.5, 0], [1.5, 1])
    m = find_bridging_body(k, l)
    assert m is k
    geo = build_bridging_geodesic(k, l, m)
    assert path_length(geo, MEET_VOL).value == pytest.approx(meet_deviation(VOL, k, l), abs=1e-9)


def test_bridging_shared_edge_slab():
    k, l = SQ, box([1, 0], [2, 1])
    m = find_bridging_body(k, l)
    assert bodies_equal(m, box([0.75, 0], [1.25, 1]))
    cert = bridging_certificate(k, l, m)
    assert cert.accepted and cert.outside_volume <= 1e-9 and cert.meet_k_volume > 0
    geo = build_bridging_geodesic(k, l, m)
    assert path_length(geo, MEET_VOL).value == pytest.approx(2.0, abs=1e-7)


def test_bridging_m_equal_l_by_symmetry():
    k, l = SQ, box([0.5, 0], [1.5, 1])
    geo = build_bridging_geodesic(k, l, l)
    assert path_length(geo, MEET_VOL).value == pytest.approx(meet_deviation(VOL, k, l), abs=1e-9)


def test_bridging_disjoint_is_none():
    assert find_bridging_body(SQ, box([2, 2], [3, 3])) is None


def test_bridging_rejects_bad_m():
    k, l = SQ, box([1, 0], [2, 1])
    with pytest.raises(GeometryError, match="bridging"):
        build_bridging_geodesic(k, l, box([0, 0], [2, 2]))


def test_bridging_shared_face_nonconvex_union():
    k, l = SQ, box([1, 0.5], [2, 2])
    m = find_bridging_body(k, l)
    assert m is not None and bridging_certificate(k, l, m).accepted
    geo = build_bridging_geodesic(k, l, m)
    assert path_length(geo, MEET_VOL).value == pytest.approx(meet_deviation(VOL, k, l), abs=1e-7)


# -- lower bound ---------------------------------------------------------------------------

@pytest.mark.parametrize("t", [0.5, 2.5, 4.0])
def test_lower_bound_discs(t):
    bound = thm1_lower_bound(MixedAreaMeasure2D.uniform(256), disc(0), disc(t))
    assert bound == pytest.approx(2 * t, abs=1e-2)


def test_lower_bound_zero_for_equal_bodies():
    assert thm1_lower_bound(MixedAreaMeasure2D.uniform(256), SQ, SQ) == 0.0


def test_lower_bound_below_sampled_paths():
    measure = MixedAreaMeasure2D.uniform(256)
    k, l = disc(0), disc(4)
    bound = thm1_lower_bound(measure, k, l)
    rng = np.random.default_rng(0)
    for _ in range(20):
        mid = random_body(rng, 2, lo=-1, hi=5)
        p = Path.from_bodies([k, hull_union(k, mid), mid, hull_union(mid, l), l])
        assert path_length(p, MEET_V1, max_depth=6).value >= bound - 1e-6


def test_lower_bound_planar_only():
    cube = box([0, 0, 0], [1, 1, 1])
    with pytest.raises(GeometryError):
        thm1_lower_bound(MixedAreaMeasure2D.uniform(16), cube, cube)


# -- continuity consequence ---------------------------------------------------------------

@settings(max_examples=10, deadline=None)
@given(seeds)
def test_consecutive_partition_bodies_intersect(seed):
    rng = np.random.default_rng(seed)
    k, l = random_pair(rng, 2, spread=3.0)
    p = build_join_path(k, l)
    bodies = [p(t) for t in np.linspace(0, 2, 17)]
    for a, b in zip(bodies, bodies[1:]):
        assert intersect(a, b) is not EMPTY
