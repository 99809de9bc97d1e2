import dataclasses
import random
from fractions import Fraction as F

import pytest

from linematch.core import Instance, InstanceError
from linematch.engine import OnlineMatcher, RunTrace, run_online
from linematch.verify import (
    CheckResult,
    VerificationReport,
    brute_force_min_path,
    check_all_lemmas,
    check_invariants,
    final_ratio_check,
    full_report,
    oracle_replay,
)


def test_oracle_path_first_phase(w1_instance):
    matcher = OnlineMatcher(w1_instance)
    state = matcher.state_view()
    path = brute_force_min_path(state, 0, F(3), w1_instance)
    assert (path.phi, path.edge_count, path.terminal) == (3, 1, 0)


def test_oracle_path_rematch_phase(w2_instance):
    matcher = OnlineMatcher(w2_instance)
    matcher.process_next()
    state = matcher.state_view()
    path = brute_force_min_path(state, 1, F(3), w2_instance)
    assert (path.phi, path.edge_count, path.terminal) == (F(595, 2), 3, 1)


def test_oracle_bounded():
    inst = Instance(t=F(3), servers=tuple(F(i) for i in range(9)),
                    requests=tuple(F(i) for i in range(9)))
    matcher = OnlineMatcher(inst)
    with pytest.raises(InstanceError):
        brute_force_min_path(matcher.state_view(), 0, F(3), inst)


def test_invariants_pass(w1_trace, w2_trace):
    assert check_invariants(w1_trace).passed
    assert check_invariants(w2_trace).passed


def _tampered(trace: RunTrace, index: int = -1, **phase_updates) -> RunTrace:
    phases = list(trace.phases)
    phases[index] = dataclasses.replace(phases[index], **phase_updates)
    return RunTrace(
        instance=trace.instance,
        t=trace.t,
        view=trace.view,
        phases=phases,
        offline_final=trace.offline_request_to_server,
        server_match_phase=trace.server_match_phase,
        capture=True,
    )


def test_feasibility_violation_reported(w1_trace):
    last = w1_trace.phases[-1]
    bad = list(last.snap2_y_request)
    bad[0] += 1  # breaks tightness of the offline edge on request 0
    tampered = _tampered(w1_trace, snap2_y_request=tuple(bad))
    report = check_invariants(tampered)
    result = report["dual-feasibility"]
    assert result.status == "fail"
    assert result.phase == 2
    assert "not tight" in result.detail


def test_sign_violation_reported(w1_trace):
    first = w1_trace.phases[0]
    bad = list(first.snap2_y_server)
    bad[1] = -1  # server 1 is still free after phase 1
    tampered = _tampered(w1_trace, index=0, snap2_y_server=tuple(bad))
    report = check_invariants(tampered)
    assert report["dual-signs"].status == "fail"
    assert "server 1" in report["dual-signs"].detail


def test_root_dual_violation_reported(w1_trace):
    last = w1_trace.phases[-1]
    bad = list(last.snap1_y_request)
    bad[last.request] += 1
    tampered = _tampered(w1_trace, snap1_y_request=tuple(bad))
    report = check_invariants(tampered)
    assert report["root-dual-equals-path-cost"].status == "fail"


def test_lemma_suite_on_worked_traces(w1_trace, w2_trace):
    for trace in (w1_trace, w2_trace):
        report = check_all_lemmas(trace)
        assert report.passed
        names = [c.name for c in report.checks]
        assert names == sorted(names, key=names.index)  # fixed order
        assert len(names) == len(set(names))
    assert check_all_lemmas(w1_trace)["max-level-report"].detail == "122"


def test_lemma_suite_random_instances():
    from linematch.bench import generate

    for kind in ("uniform", "perturbed-permutation", "cluster-gap"):
        for seed in range(2):
            inst = generate(kind, 16, seed)
            report = check_all_lemmas(run_online(inst))
            assert report.passed, [c for c in report.checks
                                   if c.status == "fail"]


def test_closed_merge_abutment_is_caught(abutting_instance):
    # Two search intervals abut exactly at a still-free server.  Closed
    # merging swallows the server into a region interior, which the
    # containment check reports; open merging keeps the regions apart.
    trace = run_online(abutting_instance)
    closed = check_all_lemmas(trace, merge="closed")
    assert closed["region-edge-containment"].status == "fail"
    open_ = check_all_lemmas(trace, merge="open")
    assert open_.passed


def test_final_ratio(w1_trace, w2_trace):
    ratio, normalized = final_ratio_check(w1_trace)
    assert ratio == 1
    assert normalized == 0.5
    ratio, _ = final_ratio_check(w2_trace)
    assert ratio == F(201, 199)


def test_final_ratio_degenerate():
    inst = Instance(t=F(3), servers=(F(2), F(2)), requests=(F(2), F(2)))
    trace = run_online(inst)
    ratio, _ = final_ratio_check(trace)
    assert ratio == 1


def test_full_report_includes_oracle(w1_trace):
    report = full_report(w1_trace)
    assert report["search-matches-enumeration"].status == "pass"
    assert report.passed


def test_full_report_skips_oracle_when_large():
    rng = random.Random(1)
    inst = Instance(
        t=F(3),
        servers=tuple(F(rng.randint(0, 100)) for _ in range(12)),
        requests=tuple(F(rng.randint(0, 100)) for _ in range(12)),
    )
    report = full_report(run_online(inst))
    assert report["search-matches-enumeration"].status == "skipped"
    assert report.passed


def test_table_trace_checks_invariants_only():
    inst = Instance(
        t=F(3),
        table=((F(0), F(1)), (F(1), F(0))),
        request_points=(1, 0),
    )
    report = full_report(run_online(inst))
    assert report.passed
    assert all(c.name in ("dual-feasibility", "dual-signs",
                          "root-dual-equals-path-cost",
                          "search-matches-enumeration")
               for c in report.checks)


def test_report_rejects_duplicates():
    report = VerificationReport()
    report.add(CheckResult("x", "p", "pass"))
    with pytest.raises(InstanceError):
        report.add(CheckResult("x", "p", "pass"))


def test_float_trace_rejected():
    inst = Instance(t=F(3), servers=(F(0),), requests=(F(1),))
    trace = run_online(inst, mode="float")
    with pytest.raises(InstanceError):
        check_invariants(trace)


def test_captureless_trace_rejected():
    inst = Instance(t=F(3), servers=(F(0),), requests=(F(1),))
    trace = run_online(inst, capture=False)
    with pytest.raises(InstanceError):
        check_invariants(trace)


def test_report_determinism(w2_instance):
    a = full_report(run_online(w2_instance)).to_json_dict()
    b = full_report(run_online(w2_instance)).to_json_dict()
    assert a == b


def test_oracle_replay_matches_engine(w2_instance):
    trace = oracle_replay(w2_instance)
    assert trace.w_online == F(201, 2)
