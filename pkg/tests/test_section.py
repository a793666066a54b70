import cmath
import math

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from dhshadow.errors import OrderingAmbiguous, PathThroughWall
from dhshadow.hecke import AffineAction
from dhshadow.kms import HarmonicShadow, flow
from dhshadow.rh import multiset_distance
from dhshadow.section import (circle_path, cocycle_check, glue_infinity, local_order,
                              monodromy_step_error, trace_path, transition, window_defect)
from dhshadow.walls import Cover, Disc, build_cover

MODEL = HarmonicShadow.from_pairs({"t": [(0.0, 0.0), (0.0, 1.0)]})


def order(sample, t="t"):
    return [s.kms_index for s in sample.slots[t]]


def test_order_at_zero_follows_levels():
    sh = HarmonicShadow.from_pairs({"t": [(-0.2, 1), (-0.7, 3j), (-0.5, -2)]})
    s = local_order(sh, 0)
    assert order(s) == [1, 2, 0]
    assert [sl.p for sl in s.slots["t"]] == [-0.7, -0.5, -0.2]
    assert all(sl.rep_shift == 0 for sl in s.slots["t"])


def test_rank_one_window():
    sh = HarmonicShadow.from_pairs({"t": [(-0.3, 1 + 1j)]})
    s = local_order(sh, 2)
    (sl,) = s.slots["t"]
    # p = -0.3 + 2 Re(2 (1 - i)) = 3.7, brought back to -0.3 by k = -4
    assert sl.rep_shift == -4 and sl.p == pytest.approx(-0.3)


def test_model_order_at_small_lambda():
    s = local_order(MODEL, 0.1)
    assert order(s) == [1, 0]
    first, second = s.slots["t"]
    assert first.rep_shift == -1 and first.p == pytest.approx(-0.8)
    assert second.rep_shift == 0 and second.p == 0
    assert s.order_ok


def test_full_tie_is_ambiguous():
    sh = HarmonicShadow.from_pairs({"t": [(0.0, 0.0), (0.0, 1j)]})
    # at lambda = 1 the point (0, i) flows to p = 2 Re(-i) = 0, e = i - i = 0
    with pytest.raises(OrderingAmbiguous):
        local_order(sh, 1)


def test_identity_transition():
    s = local_order(MODEL, 0.3 + 0.4j)
    tr = transition(s, s)
    assert tr.normal_form.is_identity()


def test_transition_across_imaginary_axis():
    left, right = local_order(MODEL, -0.05), local_order(MODEL, 0.05)
    assert order(left) == order(right) == [1, 0]
    tr = transition(left, right)
    # same order; the (0,1) representative drops from k = 0 to k = -1
    assert tr.normal_form.actions["t"] == AffineAction((0, 1), (1, 0))
    assert tr.normal_form.degree == -1
    assert monodromy_step_error(left, right, tr) < 1e-9


def test_transition_with_swap():
    # at lambda = 0.3i the (0,1) point has p = 0, so both slots tie on p
    # and the eigenvalue order decides; nearby on the real axis it does not
    a = local_order(MODEL, 0.3j)
    b = local_order(MODEL, 0.3j + 0.2)
    assert order(a) != order(b)
    tr = transition(a, b)
    assert tr.normal_form.actions["t"].sigma == (1, 0)
    assert tr.normal_form.defined_at(a.continued(b.lam).residue_shadow())


def test_constant_path():
    trace = trace_path(MODEL, [0.4 + 0.4j] * 5)
    assert all(tr.normal_form.is_identity() for tr in trace.transitions)
    assert trace.holonomy.is_identity()


def test_path_through_collision_point():
    with pytest.raises(PathThroughWall) as info:
        trace_path(MODEL, [0.5, 1.5])
    assert abs(info.value.point - 1) < 1e-9


def test_loop_around_collision_point():
    trace = trace_path(MODEL, circle_path(1j, 0.3, 64))
    assert trace.closed
    # the composite of transitions along a loop telescopes to the identity
    assert trace.holonomy.is_identity()
    assert any(not tr.normal_form.is_identity() for tr in trace.transitions)
    for s1, s2, tr in zip(trace.samples, trace.samples[1:], trace.transitions):
        assert monodromy_step_error(s1, s2, tr) < 1e-9
    m0, m1 = trace.samples[0].monodromy()["t"], trace.samples[-1].monodromy()["t"]
    assert multiset_distance(m0, m1, relative=True) < 1e-9


def test_cocycle_on_model_cover():
    cover = build_cover(MODEL, 2.0)
    rep = cocycle_check(MODEL, cover)
    assert rep.passed, rep.failures[:3]
    assert rep.pairs > 0 and rep.triples > 0


def test_cocycle_on_region_without_collisions():
    sh = HarmonicShadow.from_pairs({"t": [(-0.1, 1), (-0.6, 1)]})
    cover = build_cover(sh, 1.0)
    rep = cocycle_check(sh, cover)
    assert rep.passed and rep.triples > 0


def test_cocycle_reports_overlap_on_collision_point():
    discs = [Disc(0j, 0.5, "origin"), Disc(0.9, 0.3, "regular"), Disc(1.1, 0.3, "regular")]
    cover = Cover(1.5, 0.5, discs, [0j, 1 + 0j])
    rep = cocycle_check(MODEL, cover)
    assert not rep.passed
    bad = [f for f in rep.failures if f["kind"] == "pair"]
    assert bad and bad[0]["discs"] == [1, 2] and bad[0]["witness"] == [1.0, 0.0]


def test_glue_rank_one():
    for lam in (1, cmath.exp(0.4j), 0.5 + 2j):
        assert glue_infinity(HarmonicShadow.from_pairs({"t": [(0, 0)]}), lam).passed
    for k in range(8):
        lam = cmath.exp(2j * math.pi * k / 8 + 0.1j)
        rep = glue_infinity(HarmonicShadow.from_pairs({"t": [(-0.4, 0)]}), lam)
        assert rep.passed and rep.jump_error < 1e-9


def test_glue_model_on_circle():
    for k in range(8):
        lam = cmath.exp(2j * math.pi * (k + 0.25) / 8)
        rep = glue_infinity(MODEL, lam)
        assert rep.passed, rep.to_json()
        assert rep.harmonic_route_error < 1e-9


# --------------------------------------------------------------------------
# properties

lambdas = st.complex_numbers(min_magnitude=0.05, max_magnitude=3,
                             allow_nan=False, allow_infinity=False)


@st.composite
def shadows(draw):
    r = draw(st.integers(1, 4))
    pts = [(draw(st.floats(-0.95, 0)),
            draw(st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False)))
           for _ in range(r)]
    return HarmonicShadow.from_pairs({"t": pts})


@given(shadows(), lambdas)
def test_window_soundness(sh, lam):
    try:
        s = local_order(sh, lam)
    except OrderingAmbiguous:
        assume(False)
    assert window_defect(s) <= 1e-12 * max(1, abs(lam) ** 2)
    for sl in s.slots["t"]:
        f = flow(sh.spectrum("t").points[sl.kms_index], lam)
        assert -1 < sl.p <= 1e-12
        assert abs(f.p + sl.rep_shift - sl.p) < 1e-12 * max(1, abs(f.p))
    ps = [sl.p for sl in s.slots["t"]]
    # levels within eps_eq count as tied and are ordered by eigenvalue
    assert all(u <= v + 1e-9 for u, v in zip(ps, ps[1:]))


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 2 * math.pi), st.floats(0.05, 0.3))
def test_short_steps_preserve_monodromy(angle, step):
    start = cmath.rect(1.6, angle)
    end = start + cmath.rect(step, angle + 1.0)
    try:
        trace = trace_path(MODEL, [start, end])
    except PathThroughWall:
        assume(False)
    for s1, s2, tr in zip(trace.samples, trace.samples[1:], trace.transitions):
        assert monodromy_step_error(s1, s2, tr) < 1e-9
        assert tr.normal_form.defined_at(s1.residue_shadow())
        assert tr.normal_form.defined_at(s1.continued(s2.lam).residue_shadow())
