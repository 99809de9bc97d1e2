"""Theorem-checking harness over completed run traces.

Every invariant and structural property the engine is supposed to maintain
is re-checked here mechanically, from the recorded snapshots, with exact
arithmetic.  A failure of any check on genuine engine output is a bug, never
an expected outcome; each failure carries a reproducible witness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .core import Instance, InstanceError, Scalar, format_scalar
from .engine import DualStateView, OnlineMatcher, PhaseTrace, RunTrace
from .offline import optimal_cost, sorted_pair_cost
from .regions import (
    LevelAssignment,
    RegionGenealogy,
    TheoremViolation,
    assign_edge_levels,
    build_genealogy,
    check_level_k_structure,
    check_region_nesting,
    level_k_structure,
)
from .wellsep import check_wspc, extract_level_instances


@dataclass(frozen=True)
class CheckResult:
    name: str
    property: str  # one-line statement of what must hold
    status: str  # "pass" | "fail" | "skipped"
    lhs: str | None = None
    rhs: str | None = None
    phase: int | None = None
    detail: str | None = None

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "property": self.property,
            "status": self.status,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "phase": self.phase,
            "detail": self.detail,
        }


@dataclass
class VerificationReport:
    checks: list[CheckResult] = field(default_factory=list)

    def add(self, result: CheckResult) -> None:
        if any(c.name == result.name for c in self.checks):
            raise InstanceError([f"duplicate check name {result.name!r}"])
        self.checks.append(result)

    @property
    def passed(self) -> bool:
        return all(c.status != "fail" for c in self.checks)

    def __getitem__(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_json_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [c.to_json_dict() for c in self.checks],
        }


def _require_exact_capture(trace: RunTrace) -> None:
    if not trace.view.exact:
        raise InstanceError(["verification requires an exact-arithmetic trace"])
    if not trace.capture:
        raise InstanceError(["verification requires a trace with snapshots"])


# ---------------------------------------------------------------------------
# Brute-force path oracle


@dataclass(frozen=True)
class OraclePath:
    phi: Scalar
    edge_count: int
    terminal: int


def brute_force_min_path(state: DualStateView, r: int, t,
                         instance: Instance) -> OraclePath:
    """Exhaustively enumerate all simple alternating augmenting paths from r.

    Returns the minimum t-net-cost path, ties broken by fewest edges, then
    by smallest terminal server index.  Exponential: bounded to instances
    with at most 16 points.
    """
    n = instance.n
    if 2 * n > 16:
        raise InstanceError(["enumeration oracle bounded to 16 points"])
    t = Fraction(t)
    offline = state.offline
    server_match = {s: req for req, s in offline.items()}
    free = state.free_servers
    best: tuple | None = None

    def extend(request: int, used: frozenset[int], phi: Scalar, count: int):
        nonlocal best
        for s in range(n):
            if s in used or offline.get(request) == s:
                continue
            phi2 = phi + t * instance.distance(s, request)
            if s in free:
                key = (phi2, count + 1, s)
                if best is None or key < best:
                    best = key
            else:
                r2 = server_match[s]
                phi3 = phi2 - instance.distance(s, r2)
                extend(r2, used | {s}, phi3, count + 2)

    extend(r, frozenset(), Fraction(0), 0)
    if best is None:
        raise InstanceError(["no augmenting path: no free server reachable"])
    return OraclePath(phi=best[0], edge_count=best[1], terminal=best[2])


def oracle_replay(instance: Instance, t=None) -> RunTrace:
    """Re-run a small instance comparing every phase against the oracle.

    Raises on the first disagreement in path cost, edge count, or terminal
    server; returns the completed trace otherwise.
    """
    matcher = OnlineMatcher(instance, t=t)
    while not matcher.done:
        state = matcher.state_view()
        r = matcher.arrived
        expected = brute_force_min_path(state, r, matcher.t, instance)
        phase = matcher.process_next()
        trace_phi = Fraction(
            phase.path.phi_raw,
            matcher.view.coord_den * matcher.view.tq,
        )
        if trace_phi != expected.phi or \
                phase.path.edge_count != expected.edge_count or \
                phase.server != expected.terminal:
            raise TheoremViolation(
                "search disagrees with exhaustive enumeration",
                phase=phase.phase,
                engine=(str(trace_phi), phase.path.edge_count, phase.server),
                oracle=(str(expected.phi), expected.edge_count,
                        expected.terminal),
            )
    return RunTrace(
        instance=instance,
        t=matcher.t,
        view=matcher.view,
        phases=matcher.phases,
        offline_final=tuple(matcher.match_of_request),
        server_match_phase=tuple(matcher.server_match_phase),
        capture=matcher.capture,
    )


# ---------------------------------------------------------------------------
# Invariant suite


def check_invariants(trace: RunTrace) -> VerificationReport:
    """Exact dual feasibility, sign conditions, and the root-dual identity
    at both snapshots of every phase."""
    _require_exact_capture(trace)
    report = VerificationReport()
    report.add(_check_feasibility(trace))
    report.add(_check_dual_signs(trace))
    report.add(_check_root_dual(trace))
    return report


def _offline_before(trace: RunTrace, phase_index: int):
    """Offline matching (request -> server) before the given 1-based phase."""
    if phase_index <= 1:
        return (None,) * trace.n
    return trace.phases[phase_index - 2].offline_after


def _check_feasibility(trace: RunTrace) -> CheckResult:
    view = trace.view
    n = trace.n
    tp, tq = view.tp, view.tq
    for phase in trace.phases:
        for snap_no, (ys, yr, offline) in enumerate((
            (phase.snap1_y_server, phase.snap1_y_request,
             _offline_before(trace, phase.phase)),
            (phase.snap2_y_server, phase.snap2_y_request,
             phase.offline_after),
        ), start=1):
            for r in range(n):
                matched = offline[r]
                y_r = yr[r]
                for s in range(n):
                    d = view.dist(s, r)
                    lhs = ys[s] + y_r
                    if lhs > tp * d:
                        return CheckResult(
                            "dual-feasibility",
                            "y(s) + y(r) <= t*d(s,r) on every pair",
                            "fail",
                            lhs=format_scalar(trace.dual_value(lhs)),
                            rhs=format_scalar(trace.dual_value(tp * d)),
                            phase=phase.phase,
                            detail=f"pair ({s},{r}), snapshot {snap_no}",
                        )
                    if s == matched and lhs != tq * d:
                        return CheckResult(
                            "dual-feasibility",
                            "y(s) + y(r) <= t*d(s,r) on every pair",
                            "fail",
                            lhs=format_scalar(trace.dual_value(lhs)),
                            rhs=format_scalar(trace.dual_value(tq * d)),
                            phase=phase.phase,
                            detail=f"offline edge ({s},{r}) not tight, "
                                   f"snapshot {snap_no}",
                        )
    return CheckResult(
        "dual-feasibility",
        "y(s) + y(r) <= t*d(s,r) on every pair",
        "pass",
    )


def _check_dual_signs(trace: RunTrace) -> CheckResult:
    n = trace.n
    for phase in trace.phases:
        i = phase.phase
        free1 = trace.free_servers_at(i)
        free2 = trace.free_servers_at(i + 1)
        for snap_no, (ys, yr, free) in enumerate((
            (phase.snap1_y_server, phase.snap1_y_request, free1),
            (phase.snap2_y_server, phase.snap2_y_request, free2),
        ), start=1):
            for s in range(n):
                if ys[s] > 0 or (s in free and ys[s] != 0):
                    return CheckResult(
                        "dual-signs",
                        "server duals stay nonpositive and vanish while free; "
                        "request duals stay nonnegative and vanish before arrival",
                        "fail",
                        lhs=format_scalar(trace.dual_value(ys[s])),
                        rhs="0",
                        phase=i,
                        detail=f"server {s}, snapshot {snap_no}",
                    )
            for r in range(n):
                if yr[r] < 0 or (r >= i and yr[r] != 0):
                    return CheckResult(
                        "dual-signs",
                        "server duals stay nonpositive and vanish while free; "
                        "request duals stay nonnegative and vanish before arrival",
                        "fail",
                        lhs=format_scalar(trace.dual_value(yr[r])),
                        rhs="0",
                        phase=i,
                        detail=f"request {r}, snapshot {snap_no}",
                    )
    return CheckResult(
        "dual-signs",
        "server duals stay nonpositive and vanish while free; "
        "request duals stay nonnegative and vanish before arrival",
        "pass",
    )


def _check_root_dual(trace: RunTrace) -> CheckResult:
    for phase in trace.phases:
        lhs = phase.snap1_y_request[phase.request]
        if lhs != phase.path.phi_raw:
            return CheckResult(
                "root-dual-equals-path-cost",
                "after each search the new request's dual equals the chosen "
                "path's t-net-cost",
                "fail",
                lhs=format_scalar(trace.dual_value(lhs)),
                rhs=format_scalar(trace.dual_value(phase.path.phi_raw)),
                phase=phase.phase,
            )
    return CheckResult(
        "root-dual-equals-path-cost",
        "after each search the new request's dual equals the chosen "
        "path's t-net-cost",
        "pass",
    )


# ---------------------------------------------------------------------------
# Full lemma suite


@dataclass
class TraceAnalysis:
    """Artifacts shared by the lemma checks (built once per trace)."""

    trace: RunTrace
    w_opt: Scalar
    genealogy: RegionGenealogy
    levels: LevelAssignment | None  # None when w_opt == 0


def analyze(trace: RunTrace, merge: str = "closed") -> TraceAnalysis:
    _require_exact_capture(trace)
    if trace.instance.metric != "line":
        raise InstanceError(["trace analysis requires a line instance"])
    w_opt = optimal_cost(trace.instance)
    genealogy = build_genealogy(trace, merge=merge)
    levels = None
    if w_opt > 0:
        levels = assign_edge_levels(trace, genealogy, w_opt)
    return TraceAnalysis(trace=trace, w_opt=w_opt, genealogy=genealogy,
                         levels=levels)


def check_all_lemmas(trace: RunTrace, merge: str = "closed") -> VerificationReport:
    """Run every structural property of the analysis on one trace."""
    analysis = analyze(trace, merge=merge)
    report = VerificationReport()
    for check in _LEMMA_CHECKS:
        report.add(check(analysis))
    return report


def _pass(name: str, prop: str, detail: str | None = None) -> CheckResult:
    return CheckResult(name, prop, "pass", detail=detail)


def _fail_from_violation(name: str, prop: str,
                         exc: TheoremViolation) -> CheckResult:
    witness = ", ".join(f"{k}={v}" for k, v in exc.witness.items())
    phase = exc.witness.get("phase")
    return CheckResult(name, prop, "fail",
                       phase=phase if isinstance(phase, int) else None,
                       detail=f"{exc}: {witness}" if witness else str(exc))


def _skip(name: str, prop: str, why: str) -> CheckResult:
    return CheckResult(name, prop, "skipped", detail=why)


def _check_server_sets(analysis: TraceAnalysis) -> CheckResult:
    prop = "online and offline matchings always cover the same servers"
    trace = analysis.trace
    online: set[int] = set()
    for phase in trace.phases:
        online.add(phase.server)
        offline_servers = {
            s for s in phase.offline_after if s is not None
        }
        if offline_servers != online:
            return CheckResult(
                "matched-server-sets-equal", prop, "fail",
                phase=phase.phase,
                detail=f"online {sorted(online)} vs offline "
                       f"{sorted(offline_servers)}",
            )
    return _pass("matched-server-sets-equal", prop)


def _check_cost_identity(analysis: TraceAnalysis) -> CheckResult:
    prop = "online cost equals the endpoint-edge sum and never exceeds the " \
           "total path length"
    trace = analysis.trace
    direct = sum(
        (trace.instance.distance(p.server, p.request) for p in trace.phases),
        Fraction(0),
    )
    total_paths = sum((trace.path_length(p) for p in trace.phases), Fraction(0))
    if trace.w_online != direct or trace.w_online > total_paths:
        return CheckResult(
            "online-cost-identity", prop, "fail",
            lhs=format_scalar(trace.w_online),
            rhs=format_scalar(min(direct, total_paths)),
        )
    return _pass("online-cost-identity", prop)


def _check_cost_length(analysis: TraceAnalysis) -> CheckResult:
    prop = "twice the total path cost is at least (t-1) times the total " \
           "path length"
    trace = analysis.trace
    total_phi = sum((trace.phi(p) for p in trace.phases), Fraction(0))
    total_len = sum((trace.path_length(p) for p in trace.phases), Fraction(0))
    lhs, rhs = 2 * total_phi, (trace.t - 1) * total_len
    if lhs < rhs:
        return CheckResult("path-cost-length-bound", prop, "fail",
                           lhs=format_scalar(lhs), rhs=format_scalar(rhs))
    return _pass("path-cost-length-bound", prop)


def _check_short_long_balance(analysis: TraceAnalysis) -> CheckResult:
    prop = "short paths carry at least as much t-net-cost as long paths"
    trace = analysis.trace
    short = sum((trace.phi(p) for p in trace.phases if p.short), Fraction(0))
    long_ = sum((trace.phi(p) for p in trace.phases if not p.short),
                Fraction(0))
    if short < long_:
        return CheckResult("short-long-cost-balance", prop, "fail",
                           lhs=format_scalar(short), rhs=format_scalar(long_))
    return _pass("short-long-cost-balance", prop)


def _check_short_share(analysis: TraceAnalysis) -> CheckResult:
    prop = "(4 + 4/(t-1)) times the short-edge cost covers the whole " \
           "online cost"
    trace = analysis.trace
    w_short = sum(
        (trace.online_edge_cost(p) for p in trace.phases if p.short),
        Fraction(0),
    )
    factor = 4 + 4 / (trace.t - 1)
    if factor * w_short < trace.w_online:
        return CheckResult("short-edge-cost-share", prop, "fail",
                           lhs=format_scalar(factor * w_short),
                           rhs=format_scalar(trace.w_online))
    return _pass("short-edge-cost-share", prop)


def _nearest_free_distance(trace: RunTrace, phase: PhaseTrace) -> Scalar:
    free = trace.free_servers_at(phase.phase)
    return min(trace.instance.distance(s, phase.request) for s in free)


def _check_near_server(analysis: TraceAnalysis) -> CheckResult:
    prop = "every short edge matches within (4 + 4/(t-1)) times the " \
           "nearest free server distance"
    trace = analysis.trace
    factor = 4 + 4 / (trace.t - 1)
    for phase in trace.phases:
        if not phase.short:
            continue
        nearest = _nearest_free_distance(trace, phase)
        cost = trace.online_edge_cost(phase)
        if cost > factor * nearest:
            return CheckResult("short-edge-near-server", prop, "fail",
                               lhs=format_scalar(cost),
                               rhs=format_scalar(factor * nearest),
                               phase=phase.phase)
    return _pass("short-edge-near-server", prop)


def _check_phi_nearest(analysis: TraceAnalysis) -> CheckResult:
    prop = "each path's t-net-cost is at most t times the nearest free " \
           "server distance"
    trace = analysis.trace
    for phase in trace.phases:
        nearest = _nearest_free_distance(trace, phase)
        if trace.phi(phase) > trace.t * nearest:
            return CheckResult("path-cost-nearest-server-bound", prop, "fail",
                               lhs=format_scalar(trace.phi(phase)),
                               rhs=format_scalar(trace.t * nearest),
                               phase=phase.phase)
    return _pass("path-cost-nearest-server-bound", prop)


def _check_span_emptiness(analysis: TraceAnalysis) -> CheckResult:
    prop = "no free server lies strictly inside any request's span"
    trace = analysis.trace
    view = trace.view
    tp = view.tp
    for phase in trace.phases:
        i = phase.phase
        y_max = phase.snap1_y_max
        free = trace.free_servers_at(i)
        for r in range(i):
            bound = y_max[r]
            if bound == 0:
                continue
            for s in free:
                if tp * view.dist(s, r) < bound:
                    return CheckResult(
                        "span-free-server-emptiness", prop, "fail",
                        lhs=format_scalar(
                            trace.cost_value(view.dist(s, r))),
                        rhs=format_scalar(
                            trace.dual_value(bound) / trace.t),
                        phase=i,
                        detail=f"server {s} inside span of request {r}",
                    )
    return _pass("span-free-server-emptiness", prop)


def _check_span_coverage(analysis: TraceAnalysis) -> CheckResult:
    prop = "every edge tight after a search lies within the request's span"
    trace = analysis.trace
    view = trace.view
    tp, tq = view.tp, view.tq
    n = trace.n
    for phase in trace.phases:
        offline = _offline_before(trace, phase.phase)
        ys, yr = phase.snap1_y_server, phase.snap1_y_request
        y_max = phase.snap1_y_max
        for r in range(n):
            for s in range(n):
                d = view.dist(s, r)
                eligible = (offline[r] == s) or (ys[s] + yr[r] == tp * d)
                if eligible and y_max[r] < tp * d:
                    return CheckResult(
                        "tight-edge-span-coverage", prop, "fail",
                        lhs=format_scalar(trace.dual_value(y_max[r])),
                        rhs=format_scalar(
                            trace.t * trace.cost_value(d)),
                        phase=phase.phase,
                        detail=f"edge ({s},{r})",
                    )
    return _pass("tight-edge-span-coverage", prop)


def _check_connected(analysis: TraceAnalysis) -> CheckResult:
    prop = "per phase, the tree spans merge into one interval that contains " \
           "the tree, excludes free servers, and has the chosen server on " \
           "its boundary"
    trace = analysis.trace
    view = trace.view
    if view.server_coords is None:
        return _skip("search-interval-connected", prop, "table metric")
    lattice = view.tp * view.tq
    for phase in trace.phases:
        i = phase.phase
        y_max = phase.snap1_y_max
        spans = sorted(
            (view.request_coords[r] * lattice - y_max[r] * view.tq,
             view.request_coords[r] * lattice + y_max[r] * view.tq)
            for r in phase.tree_requests
        )
        hi = spans[0][1]
        for lo2, hi2 in spans[1:]:
            if lo2 > hi:
                return CheckResult(
                    "search-interval-connected", prop, "fail", phase=i,
                    detail="tree spans form a disconnected union",
                )
            hi = max(hi, hi2)
        lo, hi = spans[0][0], max(h for _, h in spans)
        for s in phase.tree_servers:
            if not lo <= view.server_coords[s] * lattice <= hi:
                return CheckResult(
                    "search-interval-connected", prop, "fail", phase=i,
                    detail=f"tree server {s} escapes the search interval",
                )
        for r in phase.tree_requests:
            if not lo <= view.request_coords[r] * lattice <= hi:
                return CheckResult(
                    "search-interval-connected", prop, "fail", phase=i,
                    detail=f"tree request {r} escapes the search interval",
                )
        for s in trace.free_servers_at(i):
            if lo < view.server_coords[s] * lattice < hi:
                return CheckResult(
                    "search-interval-connected", prop, "fail", phase=i,
                    detail=f"free server {s} strictly inside the search "
                           "interval",
                )
        chosen = view.server_coords[phase.server] * lattice
        if chosen != lo and chosen != hi:
            return CheckResult(
                "search-interval-connected", prop, "fail", phase=i,
                detail=f"chosen server {phase.server} not on the boundary",
            )
        if (phase.sr_lo_raw, phase.sr_hi_raw) != (lo, hi):
            return CheckResult(
                "search-interval-connected", prop, "fail", phase=i,
                detail="recorded search interval disagrees with snapshots",
            )
    return _pass("search-interval-connected", prop)


def _check_region_containment(analysis: TraceAnalysis) -> CheckResult:
    prop = "per phase, both matchings live inside the accumulated regions, " \
           "free servers stay outside their interiors, and the chosen " \
           "server sits on a boundary"
    trace = analysis.trace
    genealogy = analysis.genealogy
    view = trace.view

    def s_pos(s):
        return trace.cost_value(view.server_coords[s])

    def r_pos(r):
        return trace.cost_value(view.request_coords[r])

    for phase in trace.phases:
        i = phase.phase
        regions = [genealogy.nodes[uid].region for uid in genealogy.sigma[i - 1]]
        edges = [(p.server, p.request) for p in trace.phases[:i]]
        edges += [
            (s, r) for r, s in enumerate(phase.offline_after) if s is not None
        ]
        for s, r in edges:
            low = min(s_pos(s), r_pos(r))
            high = max(s_pos(s), r_pos(r))
            if genealogy.containing_node(i, low, high) is None:
                return CheckResult(
                    "region-edge-containment", prop, "fail", phase=i,
                    detail=f"edge ({s},{r}) outside every region",
                )
        for s in trace.free_servers_at(i):
            x = s_pos(s)
            if any(reg.interior_contains(x) for reg in regions):
                return CheckResult(
                    "region-edge-containment", prop, "fail", phase=i,
                    detail=f"free server {s} strictly inside a region",
                )
        x = s_pos(phase.server)
        if not any(reg.boundary_contains(x) for reg in regions):
            return CheckResult(
                "region-edge-containment", prop, "fail", phase=i,
                detail=f"chosen server {phase.server} on no region boundary",
            )
    return _pass("region-edge-containment", prop)


def _check_nesting(analysis: TraceAnalysis) -> CheckResult:
    prop = "any two regions across phases are disjoint or nested"
    try:
        check_region_nesting(analysis.genealogy)
    except TheoremViolation as exc:
        return _fail_from_violation("region-nesting", prop, exc)
    return _pass("region-nesting", prop)


def _check_one_level_pred(analysis: TraceAnalysis) -> CheckResult:
    prop = "a region above level 0 has at most one same-level predecessor"
    if analysis.levels is None:
        return _skip("single-predecessor-per-level", prop,
                     "levels undefined: optimal cost is zero")
    lev = analysis.levels.node_levels
    for node in analysis.genealogy.nodes:
        if lev[node.uid] < 1:
            continue
        same = [p for p in node.predecessors if lev[p] == lev[node.uid]]
        if len(same) > 1:
            return CheckResult(
                "single-predecessor-per-level", prop, "fail",
                detail=f"region {node.uid} (level {lev[node.uid]}) has "
                       f"{len(same)} same-level predecessors",
            )
    return _pass("single-predecessor-per-level", prop)


def _level_range(analysis: TraceAnalysis) -> range:
    lev = analysis.levels.node_levels
    top = max(lev.values(), default=0)
    return range(0, top + 1)


def _check_level_partition(analysis: TraceAnalysis) -> CheckResult:
    prop = "per level, maximal regions are interior-disjoint, their chains " \
           "nested, complements disjoint, and the level's edges partitioned"
    if analysis.levels is None:
        return _skip("level-edge-partition", prop,
                     "levels undefined: optimal cost is zero")
    try:
        for k in _level_range(analysis):
            structure = level_k_structure(analysis.genealogy,
                                          analysis.levels, k)
            check_level_k_structure(analysis.genealogy, analysis.levels,
                                    structure, analysis.trace)
    except TheoremViolation as exc:
        return _fail_from_violation("level-edge-partition", prop, exc)
    return _pass("level-edge-partition", prop)


def _offline_cost_inside(trace: RunTrace, node) -> Scalar:
    """Cost of the offline edges inside a region at its birth phase."""
    view = trace.view
    offline = trace.phases[node.birth - 1].offline_after
    total = Fraction(0)
    for r, s in enumerate(offline):
        if s is None:
            continue
        s_pos = trace.cost_value(view.server_coords[s])
        r_pos = trace.cost_value(view.request_coords[r])
        if node.region.low <= min(s_pos, r_pos) and \
                max(s_pos, r_pos) <= node.region.high:
            total += abs(s_pos - r_pos)
    return total


def _check_cost_families(analysis: TraceAnalysis) -> CheckResult:
    prop = "offline cost inside any disjoint region family (maximal level " \
           "regions and their complements) is at most t times the optimal"
    if analysis.levels is None:
        return _skip("region-offline-cost-bound", prop,
                     "levels undefined: optimal cost is zero")
    trace = analysis.trace
    budget = trace.t * analysis.w_opt
    for k in _level_range(analysis):
        structure = level_k_structure(analysis.genealogy, analysis.levels, k)
        total = sum(
            (_offline_cost_inside(trace, item.maximal)
             for item in structure.intervals),
            Fraction(0),
        )
        if total > budget:
            return CheckResult(
                "region-offline-cost-bound", prop, "fail",
                lhs=format_scalar(total), rhs=format_scalar(budget),
                detail=f"maximal regions of level {k}",
            )
        if k >= 1:
            comp_total = sum(
                (_offline_cost_inside(trace, node)
                 for item in structure.intervals
                 for node in item.complement),
                Fraction(0),
            )
            if comp_total > budget:
                return CheckResult(
                    "region-offline-cost-bound", prop, "fail",
                    lhs=format_scalar(comp_total), rhs=format_scalar(budget),
                    detail=f"complement regions of level {k}",
                )
    return _pass("region-offline-cost-bound", prop)


def _check_level_opt_cost(analysis: TraceAnalysis) -> CheckResult:
    prop = "per positive level, the optimal costs of the level matchings' " \
           "endpoints sum to at most 2t times the optimal"
    if analysis.levels is None:
        return _skip("level-opt-cost-bound", prop,
                     "levels undefined: optimal cost is zero")
    trace = analysis.trace
    budget = 2 * trace.t * analysis.w_opt
    for k in _level_range(analysis):
        if k < 1:
            continue
        structure = level_k_structure(analysis.genealogy, analysis.levels, k)
        total = Fraction(0)
        for item in structure.intervals:
            servers = []
            requests = []
            for phase_no in item.edge_phases:
                phase = trace.phases[phase_no - 1]
                servers.append(trace.cost_value(
                    trace.view.server_coords[phase.server]))
                requests.append(trace.cost_value(
                    trace.view.request_coords[phase.request]))
            total += sorted_pair_cost(servers, requests)
        if total > budget:
            return CheckResult(
                "level-opt-cost-bound", prop, "fail",
                lhs=format_scalar(total), rhs=format_scalar(budget),
                detail=f"level {k}",
            )
    return _pass("level-opt-cost-bound", prop)


def _extractions(analysis: TraceAnalysis):
    for k in _level_range(analysis):
        if k < 1:
            continue
        structure = level_k_structure(analysis.genealogy, analysis.levels, k)
        yield from extract_level_instances(structure, analysis.trace)


def _check_extraction(analysis: TraceAnalysis) -> CheckResult:
    prop = "every positive-level matching is a well-aligned matching of a " \
           "well-separated input whose far edges are long online edges"
    if analysis.levels is None:
        return _skip("level-extraction-well-separated", prop,
                     "levels undefined: optimal cost is zero")
    try:
        for _ in _extractions(analysis):
            pass
    except TheoremViolation as exc:
        return _fail_from_violation("level-extraction-well-separated",
                                    prop, exc)
    return _pass("level-extraction-well-separated", prop)


def _check_wspc_bound(analysis: TraceAnalysis) -> CheckResult:
    prop = "every extracted well-separated instance satisfies the " \
           "close-plus-medium cost bound and its four sub-claims"
    if analysis.levels is None:
        return _skip("separated-matching-cost-bound", prop,
                     "levels undefined: optimal cost is zero")
    try:
        for extraction in _extractions(analysis):
            opt = sorted_pair_cost(extraction.servers, extraction.requests)
            result = check_wspc(extraction.classified, extraction.frame, opt)
            if not result.holds:
                failing = [c.name for c in result.claims if not c.holds]
                return CheckResult(
                    "separated-matching-cost-bound", prop, "fail",
                    lhs=format_scalar(result.lhs),
                    rhs=format_scalar(result.rhs),
                    detail=f"level {extraction.level}; failing claims: "
                           f"{failing or ['main inequality']}",
                )
    except TheoremViolation as exc:
        return _fail_from_violation("separated-matching-cost-bound", prop,
                                    exc)
    return _pass("separated-matching-cost-bound", prop)


def _check_max_level(analysis: TraceAnalysis) -> CheckResult:
    prop = "largest online-edge level (reported, not asserted)"
    if analysis.levels is None:
        return _skip("max-level-report", prop,
                     "levels undefined: optimal cost is zero")
    return _pass("max-level-report", prop,
                 detail=str(analysis.levels.max_level))


_LEMMA_CHECKS: tuple[Callable[[TraceAnalysis], CheckResult], ...] = (
    _check_server_sets,
    _check_cost_identity,
    _check_cost_length,
    _check_short_long_balance,
    _check_short_share,
    _check_near_server,
    _check_phi_nearest,
    _check_span_emptiness,
    _check_span_coverage,
    _check_connected,
    _check_region_containment,
    _check_nesting,
    _check_one_level_pred,
    _check_level_partition,
    _check_cost_families,
    _check_level_opt_cost,
    _check_extraction,
    _check_wspc_bound,
    _check_max_level,
)


# ---------------------------------------------------------------------------
# Ratio and full report


def final_ratio_check(trace: RunTrace) -> tuple[Scalar, float]:
    """Competitive ratio of a run and its value normalized by 1 + log2(n)."""
    w_opt = optimal_cost(trace.instance)
    w_online = trace.w_online
    if w_opt == 0:
        if w_online != 0:
            raise TheoremViolation(
                "positive online cost on a zero-cost instance",
                w_online=str(w_online),
            )
        ratio = Fraction(1)
    else:
        ratio = Fraction(w_online) / Fraction(w_opt)
    normalized = float(ratio) / (1 + math.log2(trace.n))
    return ratio, normalized


def full_report(trace: RunTrace, merge: str = "closed") -> VerificationReport:
    """Invariants plus, on line instances, the entire lemma suite and a
    small-instance enumeration cross-check."""
    report = check_invariants(trace)
    if trace.instance.metric == "line":
        for result in check_all_lemmas(trace, merge=merge).checks:
            report.add(result)
    oracle_prop = "the search agrees with exhaustive path enumeration"
    if 2 * trace.n <= 16:
        try:
            oracle_replay(trace.instance, t=trace.t)
            report.add(_pass("search-matches-enumeration", oracle_prop))
        except TheoremViolation as exc:
            report.add(_fail_from_violation("search-matches-enumeration",
                                            oracle_prop, exc))
    else:
        report.add(_skip("search-matches-enumeration", oracle_prop,
                         "instance above the 16-point enumeration bound"))
    return report
