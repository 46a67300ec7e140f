import logging
import math
import time

import pytest

from bell_state import DomainError, from_werner
from planner import (
    ClassificationUnavailable,
    GrowthClass,
    Model,
    SegmentPlan,
    SweepCurve,
    SweepPoint,
    classify_growth,
    elementary_pairs,
    fit_log_growth,
    l_max_werner,
    last_converged_l,
    log_total_resources,
    onpp_restriction,
    onpp_switchers,
    plan_segment,
    sweep_m_of_l,
    total_resources,
)
from swap import ChainConvention

WERNER_P = [0.99, 0.98, 0.95]
QND_R = [0.985, 0.97, 0.925]


def _werner_b1(p):
    return from_werner(p).b1


def _curve(log2_values, converged=None):
    converged = converged or [True] * len(log2_values)
    points = []
    for L, (y, ok) in enumerate(zip(log2_values, converged), 1):
        m = math.ceil(y) if ok else None
        points.append(
            SweepPoint(
                L=L,
                chain_b1=0.9,
                m=m,
                M=None if m is None else 2 ** m,
                converged=ok,
                log2_pairs=y if ok else None,
            )
        )
    return SweepCurve(model=Model.WERNER, working_fidelity=0.95, convention=ChainConvention.PAPER_L, points=points)


# ============================================================================
# Resources
# ============================================================================

@pytest.mark.parametrize("N,L,M", [(8, 2, 4), (27, 2, 4), (16, 3, 8)])
def test_total_resources_matches_formula(N, L, M):
    expected = N ** (math.log(M, L + 1) + 1)
    assert total_resources(N, L, M) == pytest.approx(expected, rel=1e-9)


def test_total_resources_examples():
    assert total_resources(8, 2, 4) == pytest.approx(110.3, abs=0.1)
    assert total_resources(13, 4, 1) == 13.0
    assert total_resources(7, 3, 4) == pytest.approx(49.0, rel=1e-12)


def test_total_resources_rejects_zero_switchers():
    with pytest.raises(DomainError):
        total_resources(8, 0, 4)
    with pytest.raises(DomainError):
        total_resources(0, 2, 4)


def test_total_resources_overflow_is_infinite():
    assert total_resources(10 ** 300, 1, 2 ** 40) == math.inf
    assert log_total_resources(10 ** 300, 1, 2 ** 40) > 700


def test_total_resources_is_polynomial_in_segments():
    exponents = [log_total_resources(N, 5, 16) / math.log(N) for N in (2, 10, 1000, 10 ** 9)]
    assert max(exponents) - min(exponents) < 1e-12
    totals = [total_resources(9, 5, M) for M in (1, 2, 4, 8, 16)]
    assert all(b > a for a, b in zip(totals, totals[1:]))


def test_elementary_pairs():
    assert elementary_pairs(2, 4) == 12


# ============================================================================
# Thresholds
# ============================================================================

def test_l_max_examples():
    assert l_max_werner(0.9925) == pytest.approx(109.4, abs=0.15)
    assert l_max_werner(0.9925) == pytest.approx(math.log(3) / -math.log(0.99), rel=1e-12)
    assert l_max_werner(1.0) == math.inf
    with pytest.raises(DomainError):
        l_max_werner(0.5)


@pytest.mark.parametrize("b1", [0.6, 0.9625, 0.985, 0.9925, 0.99999])
def test_l_max_is_the_half_fidelity_root(b1):
    p = (4 * b1 - 1) / 3
    assert 0.75 * p ** l_max_werner(b1) + 0.25 == pytest.approx(0.5, abs=1e-9)


def test_onpp_restriction():
    assert onpp_restriction(0.9925) == pytest.approx(54.7, abs=0.1)
    expected = 1 / (2 * (1 - math.log(2.85) / math.log(3)))
    assert onpp_restriction(0.9625) == pytest.approx(expected, rel=1e-12)
    for b1 in (0.951, 0.97, 0.9925, 0.9999):
        assert onpp_restriction(b1) / l_max_werner(b1) == pytest.approx(0.5, abs=1e-12)
        assert onpp_restriction(b1) < l_max_werner(b1)
    for b1 in (0.95, 0.6, 1.0):
        with pytest.raises(DomainError):
            onpp_restriction(b1)


def test_onpp_switchers():
    assert onpp_switchers(0.9925) == 54


# ============================================================================
# Sweeps
# ============================================================================

def test_first_switcher_needs_no_purification():
    for model in Model:
        point = sweep_m_of_l(model, 0.9925, [1]).points[0]
        assert point.converged
        assert point.M in (1, 2)


def test_perfect_pairs_never_need_purification():
    curve = sweep_m_of_l("werner", _werner_b1(1.0), range(1, 11))
    assert [p.M for p in curve.points] == [1] * 10


def test_two_switchers_need_four_pairs():
    point = sweep_m_of_l(Model.WERNER, _werner_b1(0.95), [1, 2]).points[-1]
    assert (point.m, point.M) == (2, 4)


def test_sweep_rejects_bad_ranges():
    with pytest.raises(DomainError):
        sweep_m_of_l(Model.QND, 0.97, [])
    with pytest.raises(DomainError):
        sweep_m_of_l(Model.QND, 0.97, [3, 2])
    with pytest.raises(DomainError):
        sweep_m_of_l(Model.QND, 0.4, [1, 2])
    with pytest.raises(DomainError):
        sweep_m_of_l("bogus", 0.97, [1])


def test_sweep_is_deterministic():
    first = sweep_m_of_l(Model.WERNER, 0.97, range(1, 30))
    second = sweep_m_of_l(Model.WERNER, 0.97, range(1, 30), workers=1)
    assert first == second


def test_strict_convention_shifts_the_chain():
    paper = sweep_m_of_l(Model.QND, 0.97, range(2, 12), "paper")
    strict = sweep_m_of_l(Model.QND, 0.97, range(1, 11), "strict")
    assert [p.M for p in paper.points] == [p.M for p in strict.points]


def test_qnd_sweeps_are_log_linear():
    curves = {}
    for R in QND_R:
        curve = sweep_m_of_l(Model.QND, (1 + R) / 2, range(1, 61))
        assert all(p.converged for p in curve.points)
        pairs = [p.M for p in curve.points]
        assert pairs == sorted(pairs)
        assert classify_growth(curve) is GrowthClass.EXPONENTIAL
        curves[R] = pairs

    for a, b, c in zip(curves[0.925], curves[0.97], curves[0.985]):
        assert a >= b >= c


def test_qnd_slope_tracks_robustness():
    curve = sweep_m_of_l(Model.QND, (1 + 0.925) / 2, range(1, 61))
    assert fit_log_growth(curve) == pytest.approx(-math.log2(0.925), rel=0.25)


@pytest.mark.parametrize("p", WERNER_P)
def test_werner_sweeps_turn_super_exponential(p):
    b1 = _werner_b1(p)
    l_max = l_max_werner(b1)
    curve = sweep_m_of_l(Model.WERNER, b1, range(1, math.floor(l_max) + 6))
    assert len(curve.points) == math.floor(l_max) + 5

    for point in curve.points:
        if point.L < l_max / 2:
            assert point.converged
        if point.L > l_max:
            assert not point.converged
            assert point.growth_class is GrowthClass.DIVERGED

    assert abs(last_converged_l(curve) - math.floor(l_max)) <= 1

    classes = [pt.growth_class for pt in curve.points if pt.L <= math.floor(l_max)]
    assert GrowthClass.EXPONENTIAL in classes
    first_exponential = classes.index(GrowthClass.EXPONENTIAL)
    assert GrowthClass.SUPER_EXPONENTIAL in classes[first_exponential:]

    pairs = [pt.M for pt in curve.converged_points]
    assert pairs == sorted(pairs)


@pytest.mark.parametrize("b1", [0.9625, 0.985, 0.9925])
def test_werner_is_the_most_expensive(b1):
    l_values = range(1, onpp_switchers(b1) + 1)
    werner = sweep_m_of_l(Model.WERNER, b1, l_values)
    qnd = sweep_m_of_l(Model.QND, b1, l_values)
    for w, q in zip(werner.points, qnd.points):
        assert w.converged
        assert w.M >= q.M


# ============================================================================
# Classification
# ============================================================================

def test_constant_curve_is_exponential():
    assert classify_growth(_curve([3.0] * 8)) is GrowthClass.EXPONENTIAL


def test_accelerating_curve_is_super_exponential():
    assert classify_growth(_curve([0.1 * L * L for L in range(1, 9)])) is GrowthClass.SUPER_EXPONENTIAL


def test_diverged_tail():
    curve = _curve([1.0, 2.0, 3.0, 4.0, 5.0], converged=[True, True, True, True, False])
    assert classify_growth(curve) is GrowthClass.DIVERGED
    assert last_converged_l(curve) == 4


def test_too_few_points():
    with pytest.raises(ClassificationUnavailable):
        classify_growth(_curve([1.0, 2.0, 3.0]))
    with pytest.raises(ClassificationUnavailable):
        fit_log_growth(_curve([1.0]))


def test_curve_rejects_unordered_points():
    point = SweepPoint(L=3, chain_b1=0.9, m=1, M=2, converged=True, log2_pairs=1.0)
    with pytest.raises(DomainError):
        SweepCurve(Model.QND, 0.95, ChainConvention.PAPER_L, (point, point))


def test_prefix():
    curve = _curve([0.0, 1.0, 2.0, 3.0, 4.0])
    assert [p.L for p in curve.prefix(3).points] == [1, 2, 3]


def _prefix_class(curve, L):
    try:
        return classify_growth(curve.prefix(L))
    except ClassificationUnavailable:
        return None


@pytest.mark.parametrize("model", list(Model))
def test_point_classes_match_their_prefix(model):
    curve = sweep_m_of_l(model, _werner_b1(0.95), range(1, 31))
    for point in curve.points:
        assert point.growth_class is _prefix_class(curve, point.L)


def test_long_sweep_scales_linearly():
    start = time.perf_counter()
    curve = sweep_m_of_l(Model.QND, 0.99999, range(1, 20001))
    assert time.perf_counter() - start < 10.0
    assert len(curve.points) == 20000
    assert curve.points[-1].growth_class is classify_growth(curve)


def test_decreasing_pairs_are_logged(caplog):
    points = [
        SweepPoint(L=1, chain_b1=0.9, m=2, M=4, converged=True, log2_pairs=2.0),
        SweepPoint(L=2, chain_b1=0.8, m=1, M=2, converged=True, log2_pairs=1.0),
    ]
    with caplog.at_level(logging.WARNING):
        curve = SweepCurve(Model.WERNER, 0.95, ChainConvention.PAPER_L, points)
    assert "decreases" in caplog.text
    assert [p.M for p in curve.points] == [4, 2]


# ============================================================================
# Segment plan
# ============================================================================

def test_plan_uses_restricted_switchers():
    plan = plan_segment(8, 0.9925, Model.WERNER)
    assert plan.L == 54
    assert plan.l_onpp == pytest.approx(54.7, abs=0.1)
    assert plan.l_onpp == plan.l_max / 2
    assert plan.M >= 1
    assert plan.total == pytest.approx(total_resources(8, 54, plan.M), rel=1e-12)
    assert plan.within_validity


def test_plan_with_given_switchers():
    plan = plan_segment(8, _werner_b1(0.95), "werner", L=2)
    assert plan.M == 4
    assert plan.l_overridden
    assert plan.total == pytest.approx(110.3, abs=0.1)
    assert plan.elementary_pairs == 12


def test_plan_warns_outside_validity(caplog):
    with caplog.at_level(logging.WARNING):
        plan = plan_segment(4, 0.6, Model.QND)
    assert not plan.within_validity
    assert plan.L == 1
    assert "validity" in caplog.text


def test_plan_beyond_threshold_diverges():
    plan = plan_segment(4, 0.9625, Model.WERNER, L=25)
    assert plan.growth_class is GrowthClass.DIVERGED
    assert plan.M is None
    assert plan.total is None


def test_plan_invariants():
    with pytest.raises(DomainError):
        SegmentPlan(
            model=Model.QND,
            working_fidelity=0.99,
            segments=2,
            L=3,
            M=None,
            growth_class=GrowthClass.EXPONENTIAL,
            l_max=10.0,
            l_onpp=5.0,
            total=None,
            within_validity=True,
        )


def test_plan_tail_matches_full_sweep():
    for model in Model:
        plan = plan_segment(8, 0.9925, model)
        full = sweep_m_of_l(model, 0.9925, range(1, plan.L + 1)).points[-1]
        assert (plan.M, plan.growth_class) == (full.M, full.growth_class)


@pytest.mark.parametrize("model", list(Model))
def test_plan_near_perfect_fidelity_is_fast(model):
    start = time.perf_counter()
    plan = plan_segment(2, 0.9999995, model)
    assert time.perf_counter() - start < 5.0
    assert plan.L == onpp_switchers(0.9999995)
    assert plan.L > 800_000
    assert plan.M >= 1
    assert plan.growth_class is not GrowthClass.DIVERGED
