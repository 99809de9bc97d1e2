from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from linematch.core import (
    Instance,
    InstanceError,
    exact_view,
    format_scalar,
    instance_to_json_dict,
    matching_cost,
    parse_scalar,
    validate_instance,
)

rationals = st.fractions(
    min_value=-1000, max_value=1000, max_denominator=997
)


def test_parse_scalar_forms():
    assert parse_scalar(3) == 3
    assert parse_scalar("3") == 3
    assert parse_scalar("-7/2") == F(-7, 2)
    assert parse_scalar(F(1, 3)) == F(1, 3)


@pytest.mark.parametrize("bad", [1.5, "abc", "1/0", None, True, [1]])
def test_parse_scalar_rejects(bad):
    with pytest.raises(InstanceError):
        parse_scalar(bad)


@given(rationals)
def test_format_parse_round_trip(x):
    assert parse_scalar(format_scalar(x)) == x


def test_distance_examples():
    inst = Instance(t=F(3), servers=(F(0), F(5), F(1, 2)),
                    requests=(F(1), F(5), F(100)))
    assert inst.distance(0, 0) == 1
    assert inst.distance(1, 1) == 0
    assert inst.distance(2, 2) == F(199, 2)


def test_matching_cost():
    inst = Instance(t=F(3), servers=(F(0), F(10)), requests=(F(1), F(2)))
    assert matching_cost(inst, []) == 0
    assert matching_cost(inst, [(0, 0)]) == 1
    assert matching_cost(inst, [(0, 0), (1, 1)]) == 9


def test_matching_cost_rejects_repeats():
    inst = Instance(t=F(3), servers=(F(0), F(10)), requests=(F(1), F(2)))
    with pytest.raises(InstanceError):
        matching_cost(inst, [(0, 0), (0, 1)])
    with pytest.raises(InstanceError):
        matching_cost(inst, [(0, 1), (1, 1)])


def test_validate_instance_line():
    inst = validate_instance(
        {"t": "3", "metric": "line", "servers": ["0", "10"],
         "requests": ["1", "2"]}
    )
    assert inst.n == 2
    assert inst.metric == "line"
    assert inst.t == 3


def test_validate_size_mismatch():
    with pytest.raises(InstanceError, match="size mismatch"):
        validate_instance({"t": "3", "servers": ["0"], "requests": ["1", "2"]})


def test_validate_t_must_exceed_one():
    with pytest.raises(InstanceError, match="t must exceed 1"):
        validate_instance({"t": "1", "servers": ["0"], "requests": ["1"]})


def test_validate_collects_all_violations():
    try:
        validate_instance({"t": "1/2", "servers": ["0", "x"],
                           "requests": ["1"]})
    except InstanceError as exc:
        assert len(exc.violations) >= 2
    else:
        pytest.fail("expected InstanceError")


def test_validate_table_instance():
    raw = {
        "t": "2",
        "metric": "table",
        "distance_table": [["0", "1", "2"], ["1", "0", "1"], ["2", "1", "0"]],
        "requests": [2, 0, 1],
    }
    inst = validate_instance(raw)
    assert inst.metric == "table"
    assert inst.distance(0, 0) == 2
    assert inst.distance(1, 1) == 1


@pytest.mark.parametrize("table, message", [
    ([["0", "1"], ["2", "0"]], "asymmetric"),
    ([["0", "-1"], ["-1", "0"]], "negative"),
    ([["1", "1"], ["1", "0"]], "diagonal"),
    ([["0", "5", "1"], ["5", "0", "1"], ["1", "1", "0"]], "triangle"),
])
def test_validate_table_rejects(table, message):
    raw = {"t": "3", "metric": "table", "distance_table": table,
           "requests": list(range(len(table)))}
    with pytest.raises(InstanceError, match=message):
        validate_instance(raw)


def test_validate_table_request_indices():
    raw = {"t": "3", "metric": "table",
           "distance_table": [["0", "1"], ["1", "0"]], "requests": [0, 5]}
    with pytest.raises(InstanceError, match="out of range"):
        validate_instance(raw)


def test_json_round_trip():
    inst = validate_instance(
        {"t": "5/2", "servers": ["0", "1/2"], "requests": ["-3", "7"]}
    )
    again = validate_instance(instance_to_json_dict(inst))
    assert again == inst


def test_exact_view_scales_to_integers():
    inst = Instance(t=F(3, 2), servers=(F(1, 2), F(1, 3)),
                    requests=(F(0), F(5)))
    view = exact_view(inst)
    assert view.coord_den == 6
    assert view.server_coords == (3, 2)
    assert (view.tp, view.tq) == (3, 2)
    assert view.dist(0, 1) == 27  # |1/2 - 5| * 6


@given(st.lists(rationals, min_size=1, max_size=6))
def test_exact_view_distances_agree(points):
    n = len(points)
    inst = Instance(t=F(3), servers=tuple(points),
                    requests=tuple(reversed(points)))
    view = exact_view(inst)
    for s in range(n):
        for r in range(n):
            assert F(view.dist(s, r), view.coord_den) == inst.distance(s, r)
