"""Post-hoc line-metric instrumentation of a completed run.

Each request sweeps an interval (its span) while searching for a free
server; per phase the spans of the search tree merge into one search
interval, and the union of all search intervals so far decomposes into
disjoint regions.  This module tracks that evolving family of regions
(births, deaths, predecessor/successor links), buckets region lengths into
geometric levels, and extracts the per-level interval structures used by the
cost analysis.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .core import Instance, InstanceError, Scalar
from .engine import PhaseTrace, RunTrace


class TheoremViolation(AssertionError):
    """A property that must hold on genuine engine output failed.

    Carries a witness payload so verification reports stay reproducible.
    """

    def __init__(self, message: str, **witness):
        self.witness = witness
        super().__init__(message)


@dataclass(frozen=True)
class Region:
    """Interval with open-interior / closed-boundary semantics."""

    low: object
    high: object

    def __post_init__(self):
        if self.low > self.high:
            raise InstanceError([f"region endpoints out of order: {self}"])

    @property
    def length(self):
        return self.high - self.low

    @property
    def degenerate(self) -> bool:
        return self.low == self.high

    def interior_contains(self, x) -> bool:
        return self.low < x < self.high

    def closure_contains(self, x) -> bool:
        return self.low <= x <= self.high

    def contains_region(self, other: "Region") -> bool:
        return self.low <= other.low and other.high <= self.high

    def closure_intersects(self, other: "Region") -> bool:
        return self.low <= other.high and other.low <= self.high

    def interior_overlaps(self, other: "Region") -> bool:
        return self.low < other.high and other.low < self.high

    def boundary_contains(self, x) -> bool:
        return x == self.low or x == self.high


# ---------------------------------------------------------------------------
# Spans and search intervals


def span(trace: RunTrace, r: int, i: int) -> Region:
    """Interval swept by request r through phase i: center r, half-width
    (largest dual ever assigned)/t."""
    if r >= i:
        raise InstanceError([f"request {r} has not arrived by phase {i}"])
    y_max = trace.y_max_at(i)[r]
    center = trace.instance.request_position(r)
    half = y_max / trace.t
    return Region(center - half, center + half)


def search_interval(trace: RunTrace, i: int) -> Region:
    """Hull of the closed spans of the phase-i search tree.

    Raises if the union is not a single interval; that would indicate an
    engine bug, since tree members are linked by tight edges.
    """
    phase = trace.phases[i - 1]
    spans = sorted(
        (span(trace, r, i) for r in phase.tree_requests),
        key=lambda reg: (reg.low, reg.high),
    )
    cur = spans[0]
    for reg in spans[1:]:
        if reg.low > cur.high:
            raise TheoremViolation(
                "search tree spans form a disconnected union",
                phase=i, gap=(cur.high, reg.low),
            )
        if reg.high > cur.high:
            cur = Region(cur.low, reg.high)
    return Region(spans[0].low, cur.high)


def cumulative_search_region(trace: RunTrace, i: int,
                             merge: str = "closed") -> list[Region]:
    """Disjoint decomposition of all search intervals through phase i."""
    genealogy = build_genealogy(trace, merge=merge, upto=i)
    return [genealogy.nodes[nid].region for nid in genealogy.sigma[i - 1]]


# ---------------------------------------------------------------------------
# Region genealogy


@dataclass
class RegionNode:
    uid: int
    region: Region
    birth: int
    death: int | None = None
    predecessors: tuple[int, ...] = ()
    successor: int | None = None


@dataclass
class RegionGenealogy:
    """Every region that ever appeared, with lineage links and per-phase
    snapshots.  ``sigma[i-1]`` lists the node ids alive after phase i, left
    to right."""

    nodes: list[RegionNode]
    sigma: list[tuple[int, ...]]
    merge: str

    def alive(self, phase: int) -> list[RegionNode]:
        return [self.nodes[nid] for nid in self.sigma[phase - 1]]

    def containing_node(self, phase: int, low, high) -> RegionNode | None:
        """Node of sigma_phase whose closure contains [low, high], if any."""
        ids = self.sigma[phase - 1]
        lows = [self.nodes[nid].region.low for nid in ids]
        pos = bisect_right(lows, low)
        for k in (pos - 1, pos):
            if 0 <= k < len(ids):
                node = self.nodes[ids[k]]
                if node.region.low <= low and high <= node.region.high:
                    return node
        return None


def _should_merge(existing: Region, new: Region, merge: str) -> bool:
    if merge == "closed" or existing.degenerate or new.degenerate:
        return existing.closure_intersects(new)
    return existing.interior_overlaps(new)


def build_genealogy(trace: RunTrace, merge: str = "closed",
                    upto: int | None = None) -> RegionGenealogy:
    """Replay the per-phase search intervals into the region family.

    ``merge`` picks the union semantics: "closed" (default) also merges
    regions that touch at a single point, "open" merges only on interior
    overlap (degenerate point regions are absorbed on contact in both
    modes).
    """
    if merge not in ("closed", "open"):
        raise InstanceError([f"unknown merge mode {merge!r}"])
    nodes: list[RegionNode] = []
    sigma: list[tuple[int, ...]] = []
    current: list[int] = []  # node ids sorted by region.low
    last = len(trace.phases) if upto is None else upto
    for phase in trace.phases[:last]:
        if phase.sr_lo_raw is None:
            raise InstanceError(["region analysis requires a line instance"])
        new = Region(trace.region_value(phase.sr_lo_raw),
                     trace.region_value(phase.sr_hi_raw))
        overlapped = [
            nid for nid in current
            if _should_merge(nodes[nid].region, new, merge)
        ]
        if overlapped:
            lows = [nodes[overlapped[0]].region.low, new.low]
            highs = [nodes[overlapped[-1]].region.high, new.high]
            extent = Region(min(lows), max(highs))
            if len(overlapped) == 1 and nodes[overlapped[0]].region == extent:
                sigma.append(tuple(current))
                continue
            uid = len(nodes)
            nodes.append(RegionNode(uid, extent, phase.phase,
                                    predecessors=tuple(overlapped)))
            for nid in overlapped:
                nodes[nid].death = phase.phase
                nodes[nid].successor = uid
            keep = [nid for nid in current if nid not in set(overlapped)]
            keep.append(uid)
            keep.sort(key=lambda nid: (nodes[nid].region.low,
                                       nodes[nid].region.high))
            current = keep
        else:
            uid = len(nodes)
            nodes.append(RegionNode(uid, new, phase.phase))
            current.append(uid)
            current.sort(key=lambda nid: (nodes[nid].region.low,
                                          nodes[nid].region.high))
        sigma.append(tuple(current))
    return RegionGenealogy(nodes=nodes, sigma=sigma, merge=merge)


def check_region_nesting(genealogy: RegionGenealogy) -> None:
    """Any two regions across phases are disjoint or nested."""
    nodes = genealogy.nodes
    for a in range(len(nodes)):
        ra = nodes[a].region
        for b in range(a + 1, len(nodes)):
            rb = nodes[b].region
            if ra.contains_region(rb) or rb.contains_region(ra):
                continue
            if genealogy.merge == "closed":
                if ra.closure_intersects(rb):
                    raise TheoremViolation(
                        "regions from different phases overlap without nesting",
                        first=(ra.low, ra.high), second=(rb.low, rb.high),
                    )
            elif ra.interior_overlaps(rb):
                raise TheoremViolation(
                    "regions from different phases overlap without nesting",
                    first=(ra.low, ra.high), second=(rb.low, rb.high),
                )


# ---------------------------------------------------------------------------
# Levels


def level_of_interval(length, w_opt, n: int, t) -> int:
    """Geometric bucket of an interval length.

    Level 0 collects everything below the unit w_opt/n; otherwise level k is
    fixed by the half-open bracket unit*(1+1/(32t))^k <= length <
    unit*(1+1/(32t))^(k+1).
    """
    if w_opt <= 0:
        raise InstanceError(["levels undefined when the optimal cost is zero"])
    if length < 0:
        raise InstanceError(["interval length cannot be negative"])
    if isinstance(length, float) or isinstance(w_opt, float):
        beta = 1.0 + 1.0 / (32.0 * float(t))
        ratio = float(length) * n / float(w_opt)
        if ratio <= 1.0:
            return 0
        k = max(0, int(math.log(ratio) / math.log(beta)))
        while beta ** k > ratio:
            k -= 1
        while beta ** (k + 1) <= ratio:
            k += 1
        return max(0, k)
    t = Fraction(t)
    ratio = Fraction(length) * n / Fraction(w_opt)
    if ratio <= 1:
        return 0
    num = 32 * t.numerator + t.denominator
    den = 32 * t.numerator
    k = max(0, int(math.log(float(ratio)) / math.log(num / den)))
    while den ** k * ratio.numerator < num ** k * ratio.denominator:
        k -= 1
    while den ** (k + 1) * ratio.numerator >= num ** (k + 1) * ratio.denominator:
        k += 1
    return max(0, k)


@dataclass
class LevelAssignment:
    """Levels for every region node and every online edge."""

    w_opt: object
    node_levels: dict[int, int]
    edge_levels: tuple[int, ...]  # per phase
    edge_nodes: tuple[int, ...]  # containing node id per phase
    max_level: int


def assign_edge_levels(trace: RunTrace, genealogy: RegionGenealogy,
                       w_opt) -> LevelAssignment:
    """Give each online edge the level of its containing phase region.

    The containing region is found by closure membership; the server may sit
    exactly on the boundary.  A missing container is an engine bug.
    """
    t = trace.t if trace.view.exact else float(trace.t)
    node_levels = {
        node.uid: level_of_interval(node.region.length, w_opt, trace.n, t)
        for node in genealogy.nodes
    }
    edge_levels = []
    edge_nodes = []
    for phase in trace.phases:
        s_pos = trace.cost_value(
            trace.view.server_coords[phase.server]
        )
        r_pos = trace.cost_value(
            trace.view.request_coords[phase.request]
        )
        low, high = min(s_pos, r_pos), max(s_pos, r_pos)
        node = genealogy.containing_node(phase.phase, low, high)
        if node is None:
            raise TheoremViolation(
                "online edge not contained in any region of its phase",
                phase=phase.phase, edge=(phase.server, phase.request),
            )
        edge_levels.append(node_levels[node.uid])
        edge_nodes.append(node.uid)
    return LevelAssignment(
        w_opt=w_opt,
        node_levels=node_levels,
        edge_levels=tuple(edge_levels),
        edge_nodes=tuple(edge_nodes),
        max_level=max(edge_levels) if edge_levels else 0,
    )


# ---------------------------------------------------------------------------
# Per-level interval structure


@dataclass
class LevelInterval:
    """One maximal level-k region with its growth chain and complement."""

    maximal: RegionNode
    chain: tuple[RegionNode, ...]  # minimal first, maximal last
    complement: tuple[RegionNode, ...]  # strictly lower level
    edge_phases: tuple[int, ...]  # 1-based phases of the level-k edges inside

    @property
    def minimal(self) -> RegionNode:
        return self.chain[0]


@dataclass
class LevelKStructure:
    level: int
    intervals: tuple[LevelInterval, ...]


def level_k_structure(genealogy: RegionGenealogy, levels: LevelAssignment,
                      k: int) -> LevelKStructure:
    """Maximal level-k regions, their nested chains, complements, and edges.

    A level-k region is maximal when it survives to the end or its successor
    jumps past level k; the chain walks back through the unique level-k
    predecessor at each birth down to the minimal region.
    """
    nodes = genealogy.nodes
    lev = levels.node_levels
    maximal = [
        node for node in nodes
        if lev[node.uid] == k and (
            node.successor is None or lev[node.successor] > k
        )
    ]

    def chain_of(node: RegionNode) -> tuple[list[int], list[int]]:
        same = [p for p in node.predecessors if lev[p] == k]
        below = [p for p in node.predecessors if lev[p] < k]
        if any(lev[p] > k for p in node.predecessors):
            raise TheoremViolation(
                "predecessor with level above its successor",
                node=node.uid,
            )
        if len(same) > 1:
            # only possible at level 0, where tiny regions may merge into a
            # region that is still tiny; the chain notion is not used there
            raise TheoremViolation(
                "two same-level predecessors of one region",
                node=node.uid, level=k, predecessors=tuple(same),
            )
        if not same:
            return [node.uid], below
        chain, comp = chain_of(nodes[same[0]])
        chain.append(node.uid)
        comp.extend(below)
        return chain, comp

    # group the level-k edges by the maximal region their containers grow into
    edge_groups: dict[int, list[int]] = {node.uid: [] for node in maximal}
    for idx, level in enumerate(levels.edge_levels):
        if level != k:
            continue
        nid = levels.edge_nodes[idx]
        while nodes[nid].successor is not None and \
                lev[nodes[nid].successor] == k:
            nid = nodes[nid].successor
        if nid not in edge_groups:
            raise TheoremViolation(
                "level-k edge does not grow into a maximal level-k region",
                phase=idx + 1, level=k,
            )
        edge_groups[nid].append(idx + 1)

    intervals = []
    for node in sorted(maximal, key=lambda nd: (nd.region.low, nd.region.high)):
        if k == 0:
            chain, comp = [node.uid], []
        else:
            chain, comp = chain_of(node)
        intervals.append(LevelInterval(
            maximal=node,
            chain=tuple(nodes[uid] for uid in chain),
            complement=tuple(nodes[uid] for uid in comp),
            edge_phases=tuple(edge_groups[node.uid]),
        ))
    return LevelKStructure(level=k, intervals=tuple(intervals))


def check_level_k_structure(genealogy: RegionGenealogy,
                            levels: LevelAssignment,
                            structure: LevelKStructure,
                            trace: RunTrace) -> None:
    """Structural properties of one level's interval family.

    Maximal regions are pairwise interior-disjoint and their edge groups
    partition the level's online edges; chains are nested with the minimal
    region first; complements are disjoint regions inside the maximal one,
    of strictly lower level.
    """
    k = structure.level
    nodes = genealogy.nodes
    regions = [item.maximal.region for item in structure.intervals]
    for a in range(len(regions)):
        for b in range(a + 1, len(regions)):
            if regions[a].interior_overlaps(regions[b]):
                raise TheoremViolation(
                    "maximal same-level regions overlap",
                    level=k,
                    first=(regions[a].low, regions[a].high),
                    second=(regions[b].low, regions[b].high),
                )
    grouped = [p for item in structure.intervals for p in item.edge_phases]
    expected = [i + 1 for i, lv in enumerate(levels.edge_levels) if lv == k]
    if sorted(grouped) != expected:
        raise TheoremViolation(
            "level edges are not partitioned by the maximal regions",
            level=k, grouped=tuple(sorted(grouped)), expected=tuple(expected),
        )
    if k == 0:
        return  # chains and complements are only meaningful above level 0
    for item in structure.intervals:
        chain_regions = [node.region for node in item.chain]
        for earlier, later in zip(chain_regions, chain_regions[1:]):
            if not later.contains_region(earlier):
                raise TheoremViolation(
                    "growth chain is not nested", level=k,
                    maximal=item.maximal.uid,
                )
        if any(levels.node_levels[node.uid] != k for node in item.chain):
            raise TheoremViolation("growth chain leaves its level", level=k)
        minimal = item.minimal
        if any(levels.node_levels[p] >= k for p in minimal.predecessors):
            raise TheoremViolation(
                "first chain region is not minimal", level=k,
                node=minimal.uid,
            )
        comp_regions = [node.region for node in item.complement]
        for a in range(len(comp_regions)):
            if not item.maximal.region.contains_region(comp_regions[a]):
                raise TheoremViolation(
                    "complement region escapes its maximal region", level=k,
                )
            for b in range(a + 1, len(comp_regions)):
                if comp_regions[a].interior_overlaps(comp_regions[b]):
                    raise TheoremViolation(
                        "complement regions overlap", level=k,
                    )
        if any(levels.node_levels[node.uid] >= k for node in item.complement):
            raise TheoremViolation(
                "complement region at or above the level", level=k,
            )
        # every point matched inside the maximal region (at its birth) that
        # is not an endpoint of a level-k edge sits inside a complement region
        birth = item.maximal.birth
        offline = trace.phases[birth - 1].offline_after
        if offline is None:
            return  # no snapshots captured: skip the matched-point check
        edge_points = set()
        for phase_no in item.edge_phases:
            ph = trace.phases[phase_no - 1]
            edge_points.add(("s", ph.server))
            edge_points.add(("r", ph.request))
        for r, s in enumerate(offline):
            if s is None:
                continue
            s_pos = trace.cost_value(trace.view.server_coords[s])
            r_pos = trace.cost_value(trace.view.request_coords[r])
            low, high = min(s_pos, r_pos), max(s_pos, r_pos)
            if not (item.maximal.region.low <= low
                    and high <= item.maximal.region.high):
                continue  # offline edge lives in some other region
            for tag, idx, pos in (("s", s, s_pos), ("r", r, r_pos)):
                if (tag, idx) in edge_points:
                    continue
                if not any(reg.closure_contains(pos) for reg in comp_regions):
                    raise TheoremViolation(
                        "matched point not covered by the complement",
                        level=k, point=(tag, idx), birth=birth,
                    )
