from fractions import Fraction as F

import pytest

from linematch.core import Instance, InstanceError
from linematch.engine import run_online
from linematch.offline import optimal_cost
from linematch.regions import (
    Region,
    TheoremViolation,
    assign_edge_levels,
    build_genealogy,
    check_level_k_structure,
    check_region_nesting,
    cumulative_search_region,
    level_k_structure,
    level_of_interval,
    search_interval,
    span,
)


def test_region_semantics():
    reg = Region(F(0), F(2))
    assert reg.interior_contains(F(1))
    assert not reg.interior_contains(F(0))
    assert reg.closure_contains(F(0))
    assert reg.boundary_contains(F(2))
    assert reg.length == 2
    point = Region(F(3), F(3))
    assert point.degenerate
    assert not point.interior_contains(F(3))
    with pytest.raises(InstanceError):
        Region(F(2), F(1))


def test_span_examples(w1_trace):
    assert span(w1_trace, 0, 1) == Region(F(0), F(2))
    assert span(w1_trace, 1, 2) == Region(F(-6), F(10))
    # the first request's span keeps growing with its historical max dual
    assert span(w1_trace, 0, 2) == Region(F(-16, 3), F(22, 3))


def test_span_requires_arrival(w1_trace):
    with pytest.raises(InstanceError):
        span(w1_trace, 1, 1)


def test_search_interval_examples(w1_trace):
    assert search_interval(w1_trace, 1) == Region(F(0), F(2))
    assert search_interval(w1_trace, 2) == Region(F(-6), F(10))


def test_search_interval_degenerate():
    inst = Instance(t=F(3), servers=(F(5),), requests=(F(5),))
    trace = run_online(inst)
    assert search_interval(trace, 1).degenerate


def test_cumulative_search_region(w1_trace):
    assert cumulative_search_region(w1_trace, 1) == [Region(F(0), F(2))]
    assert cumulative_search_region(w1_trace, 2) == [Region(F(-6), F(10))]


def test_cumulative_region_disjoint_clusters():
    inst = Instance(t=F(3), servers=(F(0), F(1000)),
                    requests=(F(1), F(1001)))
    trace = run_online(inst)
    regions = cumulative_search_region(trace, 2)
    assert len(regions) == 2


def test_genealogy_links(w1_trace):
    genealogy = build_genealogy(w1_trace)
    first, second = genealogy.nodes
    assert first.region == Region(F(0), F(2))
    assert (first.birth, first.death, first.successor) == (1, 2, second.uid)
    assert second.region == Region(F(-6), F(10))
    assert (second.birth, second.death) == (2, None)
    assert second.predecessors == (first.uid,)
    check_region_nesting(genealogy)


def test_genealogy_single_phase():
    inst = Instance(t=F(3), servers=(F(0),), requests=(F(1),))
    trace = run_online(inst)
    genealogy = build_genealogy(trace)
    assert len(genealogy.nodes) == 1
    assert genealogy.nodes[0].predecessors == ()


def test_genealogy_merge_modes(abutting_instance):
    trace = run_online(abutting_instance)
    closed = build_genealogy(trace, merge="closed")
    open_ = build_genealogy(trace, merge="open")
    # after phase 2 the closed mode has one region, the open mode two
    assert len(closed.sigma[1]) == 1
    assert len(open_.sigma[1]) == 2
    check_region_nesting(closed)
    check_region_nesting(open_)


def test_level_bracket_examples():
    assert level_of_interval(F(1, 2), F(1), 1, F(3)) == 0
    assert level_of_interval(F(1), F(1), 1, F(3)) == 0
    assert level_of_interval(F(2), F(1), 1, F(3)) == 66
    assert level_of_interval(F(97, 96), F(1), 1, F(3)) == 1
    assert level_of_interval(F(0), F(1), 1, F(3)) == 0
    # exact bracket: (97/96)^66 <= 2 < (97/96)^67
    assert F(97, 96) ** 66 <= 2 < F(97, 96) ** 67


def test_level_bracket_float_matches_exact():
    for length, base in ((2.0, 1.0), (16.0, 4.5), (1.5, 1.0), (0.3, 1.0)):
        exact = level_of_interval(F(length), F(base), 1, F(3))
        approx = level_of_interval(length, base, 1, 3.0)
        assert exact == approx


def test_level_requires_positive_opt():
    with pytest.raises(InstanceError):
        level_of_interval(F(1), F(0), 1, F(3))


def test_edge_levels(w1_trace):
    genealogy = build_genealogy(w1_trace)
    levels = assign_edge_levels(w1_trace, genealogy, F(9))
    assert levels.edge_levels == (0, 122)
    assert levels.max_level == 122
    # 16 relative to unit 9/2 lands at level 122 exactly
    assert F(97, 96) ** 122 <= F(32, 9) < F(97, 96) ** 123


def test_level_structure(w1_trace):
    genealogy = build_genealogy(w1_trace)
    levels = assign_edge_levels(w1_trace, genealogy, F(9))
    top = level_k_structure(genealogy, levels, 122)
    assert len(top.intervals) == 1
    item = top.intervals[0]
    assert item.maximal.region == Region(F(-6), F(10))
    assert [c.region for c in item.complement] == [Region(F(0), F(2))]
    assert item.edge_phases == (2,)
    check_level_k_structure(genealogy, levels, top, w1_trace)

    base = level_k_structure(genealogy, levels, 0)
    assert len(base.intervals) == 1
    assert base.intervals[0].maximal.region == Region(F(0), F(2))
    assert base.intervals[0].edge_phases == (1,)

    empty = level_k_structure(genealogy, levels, 50)
    assert empty.intervals == ()


def test_structures_hold_on_random_runs():
    from linematch.bench import generate

    for kind in ("uniform", "perturbed-permutation", "cluster-gap"):
        for seed in range(3):
            inst = generate(kind, 24, seed)
            trace = run_online(inst)
            w_opt = optimal_cost(inst)
            genealogy = build_genealogy(trace)
            check_region_nesting(genealogy)
            levels = assign_edge_levels(trace, genealogy, w_opt)
            top = max(levels.node_levels.values())
            for k in range(top + 1):
                structure = level_k_structure(genealogy, levels, k)
                check_level_k_structure(genealogy, levels, structure, trace)
