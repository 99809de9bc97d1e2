"""Online matching engine maintaining a t-relaxed primal-dual state.

The engine keeps two matchings over the same served subset: the online
matching (the irrevocable answer) and an offline matching with dual weights
satisfying, for every server s and request r,

    y(s) + y(r) <= t * d(s, r),        with equality at d(s, r) on offline edges.

Each arrival triggers a Hungarian-style search for the augmenting path of
minimum t-net-cost

    phi_t(P) = t * (sum of non-offline edge lengths) - (sum of offline edge lengths),

realised as Dijkstra over the residual graph with reduced costs
``t*d(s,r) - y(s) - y(r)`` on non-offline arcs and 0 on offline arcs.  Ties
are broken by fewest edges, then smallest server index.  The offline matching
is augmented along the path; the online matching just links the endpoints.

Exact mode runs on an integer lattice (coordinates scaled by their common
denominator, duals in units of 1/(D*tq)); float mode reuses the same code
with raw floats for large benchmark runs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from heapq import heappop, heappush
from typing import Iterator

from .core import (
    Instance,
    InstanceError,
    NumericView,
    Scalar,
    exact_view,
    float_view,
    format_scalar,
)

_SERVER = 0
_REQUEST = 1


class EngineInvariantError(AssertionError):
    """The primal-dual state broke one of its exact invariants: a bug."""


@dataclass(frozen=True)
class PathEdge:
    server: int
    request: int
    in_offline: bool  # membership in the offline matching before augmenting


@dataclass(frozen=True)
class AugmentingPath:
    """Alternating path from the new request to a free server."""

    edges: tuple[PathEdge, ...]
    terminal: int  # free server index
    phi_raw: object  # t-net-cost in dual units
    length_raw: object  # total length in coordinate units

    @property
    def edge_count(self) -> int:
        return len(self.edges)


@dataclass(frozen=True)
class PhaseTrace:
    """Everything recorded while processing one arrival.

    Raw numeric fields live on the engine's internal lattice; the Fraction
    views are exposed through :class:`RunTrace`, which knows the scales.
    """

    phase: int  # 1-based
    request: int
    server: int
    path: AugmentingPath
    tree_servers: tuple[int, ...]
    tree_requests: tuple[int, ...]
    short: bool
    sr_lo_raw: object | None  # search interval hull, region lattice units
    sr_hi_raw: object | None
    snap1_y_server: tuple | None = None
    snap1_y_request: tuple | None = None
    snap1_y_max: tuple | None = None
    snap2_y_server: tuple | None = None
    snap2_y_request: tuple | None = None
    offline_after: tuple | None = None  # request -> server or None


@dataclass
class DualStateView:
    """Read-only Fraction snapshot of the primal-dual state.

    Used by oracles and inspection code; the engine itself works on raw
    lattice integers.
    """

    offline: dict[int, int]  # request -> server
    y_server: tuple[Scalar, ...]
    y_request: tuple[Scalar, ...]
    y_max: tuple[Scalar, ...]
    free_servers: frozenset[int]
    arrived: int


class RunTrace:
    """Completed run: per-phase records plus final matchings."""

    def __init__(self, instance: Instance, t: Fraction, view: NumericView,
                 phases: list[PhaseTrace], offline_final: tuple,
                 server_match_phase: tuple, capture: bool):
        self.instance = instance
        self.t = t
        self.view = view
        self.phases = phases
        self.offline_request_to_server = offline_final
        self.server_match_phase = server_match_phase
        self.capture = capture

    # -- scale conversions ---------------------------------------------------

    def _num(self, raw, unit_den):
        if self.view.exact:
            return Fraction(raw, unit_den)
        return raw

    def cost_value(self, raw):
        """Coordinate-unit raw value (distances, lengths) as a scalar."""
        return self._num(raw, self.view.coord_den)

    def dual_value(self, raw):
        """Dual-unit raw value (duals, path costs) as a scalar."""
        return self._num(raw, self.view.coord_den * self.view.tq)

    def region_value(self, raw):
        """Region-lattice raw value (interval endpoints) as a scalar."""
        return self._num(raw, self.view.coord_den * self.view.tp * self.view.tq)

    # -- derived quantities ----------------------------------------------------

    @property
    def n(self) -> int:
        return self.instance.n

    def online_pairs(self) -> list[tuple[int, int]]:
        return [(p.server, p.request) for p in self.phases]

    def phi(self, phase: PhaseTrace):
        return self.dual_value(phase.path.phi_raw)

    def path_length(self, phase: PhaseTrace):
        return self.cost_value(phase.path.length_raw)

    def online_edge_cost(self, phase: PhaseTrace):
        return self.cost_value(self.view.dist(phase.server, phase.request))

    @property
    def w_online(self):
        total = None
        for p in self.phases:
            c = self.online_edge_cost(p)
            total = c if total is None else total + c
        return total if total is not None else Fraction(0)

    def free_servers_at(self, phase: int) -> frozenset[int]:
        """Servers unmatched at the start of the given 1-based phase."""
        return frozenset(
            s for s, mp in enumerate(self.server_match_phase)
            if mp is None or mp >= phase
        )

    def search_region(self, phase: PhaseTrace):
        """Hull of the search interval for a phase, as scalar endpoints."""
        if phase.sr_lo_raw is None:
            raise InstanceError(["search intervals undefined in table mode"])
        return self.region_value(phase.sr_lo_raw), self.region_value(phase.sr_hi_raw)

    def y_max_at(self, phase_index: int) -> tuple:
        """Historical max duals after the given 1-based phase (capture mode)."""
        snap = self.phases[phase_index - 1].snap1_y_max
        if snap is None:
            raise InstanceError(["trace was recorded without dual snapshots"])
        return tuple(self.dual_value(v) for v in snap)

    def to_json_dict(self) -> dict:
        phases = []
        for p in self.phases:
            entry = {
                "phase": p.phase,
                "request": p.request,
                "server": p.server,
                "phi": format_scalar(self.phi(p)),
                "length": format_scalar(self.path_length(p)),
                "edge_count": p.path.edge_count,
                "classification": "short" if p.short else "long",
                "path": [
                    {"server": e.server, "request": e.request,
                     "was_offline": e.in_offline}
                    for e in p.path.edges
                ],
                "tree_servers": list(p.tree_servers),
                "tree_requests": list(p.tree_requests),
            }
            if p.snap2_y_server is not None:
                entry["y_server"] = [
                    format_scalar(self.dual_value(v)) for v in p.snap2_y_server
                ]
                entry["y_request"] = [
                    format_scalar(self.dual_value(v)) for v in p.snap2_y_request
                ]
            phases.append(entry)
        return {
            "t": format_scalar(self.t),
            "n": self.n,
            "arithmetic": "exact" if self.view.exact else "float",
            "w_online": format_scalar(self.w_online),
            "phases": phases,
            "offline_matching": [
                {"server": s, "request": r}
                for r, s in enumerate(self.offline_request_to_server)
            ],
        }


def is_short_path(length, phi, t) -> bool:
    """A path is short when length <= 4/(t-1) * t-net-cost (inclusive)."""
    return (t - 1) * length <= 4 * phi


def t_net_cost(path_edges, offline_pairs, t: Fraction) -> Scalar:
    """t-net-cost of an alternating path with respect to an offline matching.

    ``path_edges`` is a sequence of (server, request, distance) triples;
    ``offline_pairs`` the offline matching as a set of (server, request).
    """
    offline = set(offline_pairs)
    total = Fraction(0)
    previous = None
    for s, r, d in path_edges:
        inside = (s, r) in offline
        if previous is not None and inside == previous:
            raise InstanceError(["path does not alternate offline membership"])
        previous = inside
        total += -d if inside else t * d
    return total


class OnlineMatcher:
    """Stateful engine processing arrivals one at a time."""

    def __init__(self, instance: Instance, t: Fraction | None = None,
                 mode: str = "exact", capture: bool = True):
        if mode not in ("exact", "float"):
            raise InstanceError([f"unknown arithmetic mode {mode!r}"])
        self.instance = instance
        self.t = Fraction(instance.t if t is None else t)
        if self.t < 1:
            raise InstanceError(["engine requires t >= 1"])
        self.mode = mode
        self.capture = capture
        self.view = exact_view(instance, self.t) if mode == "exact" \
            else float_view(instance, self.t)
        n = self.view.n
        zero = 0 if self.view.exact else 0.0
        self.y_server = [zero] * n
        self.y_request = [zero] * n
        self.y_max = [zero] * n
        self.match_of_server: list[int | None] = [None] * n
        self.match_of_request: list[int | None] = [None] * n
        self.server_match_phase: list[int | None] = [None] * n
        self.arrived = 0
        self.phases: list[PhaseTrace] = []

    # -- public views ----------------------------------------------------------

    def state_view(self) -> DualStateView:
        unit = 1 if not self.view.exact else self.view.coord_den * self.view.tq

        def conv(v):
            return Fraction(v, unit) if self.view.exact else v

        return DualStateView(
            offline={r: s for r, s in enumerate(self.match_of_request)
                     if s is not None},
            y_server=tuple(conv(v) for v in self.y_server),
            y_request=tuple(conv(v) for v in self.y_request),
            y_max=tuple(conv(v) for v in self.y_max),
            free_servers=frozenset(
                s for s, m in enumerate(self.match_of_server) if m is None
            ),
            arrived=self.arrived,
        )

    @property
    def done(self) -> bool:
        return self.arrived >= self.view.n

    # -- the two steps of a phase -----------------------------------------------

    def _search(self, r_i: int):
        """Dijkstra over the residual graph, lexicographic (cost, hops) labels.

        Returns the terminal free server, its label, and parent pointers.
        Stops at the first free server popped: heap order makes that the
        minimum (cost, hops, index) among free servers.
        """
        view = self.view
        n = view.n
        tp = view.tp
        inf = None
        dist_s: list = [inf] * n
        dist_r: list = [inf] * n
        hops_s = [0] * n
        hops_r = [0] * n
        done_s = [False] * n
        done_r = [False] * n
        # parent of a server is the request that relaxed it; parent of a
        # request is implicit (its offline match).
        parent_s: list[int | None] = [None] * n
        dist_r[r_i] = 0 if view.exact else 0.0
        heap: list = [(dist_r[r_i], 0, _REQUEST, r_i)]
        terminal = None
        term_label = None
        while heap:
            d, h, kind, v = heappop(heap)
            if kind == _SERVER:
                if done_s[v] or (dist_s[v], hops_s[v]) < (d, h):
                    continue
                done_s[v] = True
                if self.match_of_server[v] is None:
                    terminal = v
                    term_label = (d, h)
                    break
                # offline arc server -> its request, reduced cost 0
                r = self.match_of_server[v]
                if not done_r[r]:
                    cand = (d, h + 1)
                    if dist_r[r] is None or cand < (dist_r[r], hops_r[r]):
                        dist_r[r], hops_r[r] = cand
                        heappush(heap, (cand[0], cand[1], _REQUEST, r))
            else:
                if done_r[v] or (dist_r[v], hops_r[v]) < (d, h):
                    continue
                done_r[v] = True
                y_rv = self.y_request[v]
                matched_to = self.match_of_request[v]
                for s in range(n):
                    if s == matched_to or done_s[s]:
                        continue
                    w = tp * view.dist(s, v) - self.y_server[s] - y_rv
                    if not view.exact and w < 0.0:
                        w = 0.0
                    cand = (d + w, h + 1)
                    if dist_s[s] is None or cand < (dist_s[s], hops_s[s]):
                        dist_s[s], hops_s[s] = cand
                        parent_s[s] = v
                        heappush(heap, (cand[0], cand[1], _SERVER, s))
        if terminal is None:
            raise EngineInvariantError("search found no free server")
        return terminal, term_label, dist_s, dist_r, done_s, done_r, parent_s

    def _reconstruct(self, r_i: int, terminal: int, parent_s) -> AugmentingPath:
        view = self.view
        edges: list[PathEdge] = []
        s = terminal
        phi = 0 if view.exact else 0.0
        length = 0 if view.exact else 0.0
        while True:
            r = parent_s[s]
            d = view.dist(s, r)
            edges.append(PathEdge(s, r, in_offline=False))
            phi += view.tp * d
            length += d
            if r == r_i:
                break
            s2 = self.match_of_request[r]
            d2 = view.dist(s2, r)
            edges.append(PathEdge(s2, r, in_offline=True))
            phi -= view.tq * d2
            length += d2
            s = s2
        edges.reverse()
        return AugmentingPath(tuple(edges), terminal, phi, length)

    def _augment(self, path: AugmentingPath) -> None:
        """Flip path edges in the offline matching and restore tightness.

        Each request on the path gets its dual lowered by (t-1) times its new
        offline edge length so the tight-at-d condition holds again.
        """
        view = self.view
        for edge in path.edges:
            if edge.in_offline:
                self.match_of_server[edge.server] = None
                self.match_of_request[edge.request] = None
        for edge in path.edges:
            if not edge.in_offline:
                d = view.dist(edge.server, edge.request)
                self.y_request[edge.request] -= (view.tp - view.tq) * d
                self.match_of_server[edge.server] = edge.request
                self.match_of_request[edge.request] = edge.server
                if view.exact:
                    lhs = self.y_server[edge.server] + self.y_request[edge.request]
                    if lhs != view.tq * d:
                        raise EngineInvariantError(
                            f"offline edge ({edge.server},{edge.request}) "
                            "not tight after augmenting"
                        )

    def process_next(self) -> PhaseTrace:
        """Run one full phase for the next arrival and record its trace."""
        if self.done:
            raise InstanceError(["all requests already processed"])
        view = self.view
        r_i = self.arrived
        phase_no = r_i + 1
        terminal, term_label, dist_s, dist_r, done_s, done_r, parent_s = \
            self._search(r_i)
        ell = term_label[0]

        # dual adjustments: vertices finalized strictly below the terminal label
        tree_requests = []
        tree_servers = []
        for v in range(view.n):
            if done_r[v] and dist_r[v] is not None and dist_r[v] < ell:
                delta = ell - dist_r[v]
                self.y_request[v] += delta
                if self.y_request[v] > self.y_max[v]:
                    self.y_max[v] = self.y_request[v]
                tree_requests.append(v)
            if done_s[v] and dist_s[v] is not None and dist_s[v] < ell:
                self.y_server[v] -= ell - dist_s[v]
                tree_servers.append(v)
        if r_i not in tree_requests:  # zero-cost direct match: tree is just r_i
            tree_requests.insert(0, r_i)

        path = self._reconstruct(r_i, terminal, parent_s)
        if view.exact:
            if path.phi_raw != ell:
                raise EngineInvariantError("path cost disagrees with search label")
            if self.y_request[r_i] != ell:
                raise EngineInvariantError(
                    "root dual does not equal the path cost after the search"
                )
            if len(path.edges) != term_label[1]:
                raise EngineInvariantError("edge count disagrees with hop label")

        snap1_ys = snap1_yr = snap1_ym = None
        if self.capture:
            snap1_ys = tuple(self.y_server)
            snap1_yr = tuple(self.y_request)
            snap1_ym = tuple(self.y_max)

        sr_lo = sr_hi = None
        if view.server_coords is not None:
            lattice = view.tp * view.tq
            for v in tree_requests:
                center = view.request_coords[v] * lattice
                half = self.y_max[v] * view.tq
                lo, hi = center - half, center + half
                if sr_lo is None or lo < sr_lo:
                    sr_lo = lo
                if sr_hi is None or hi > sr_hi:
                    sr_hi = hi

        self._augment(path)
        self.server_match_phase[terminal] = phase_no
        self.arrived += 1

        # short iff length <= 4/(t-1) * phi, compared exactly:
        # length * (tp - tq) <= 4 * phi (both sides in lattice units)
        if view.tp == view.tq:
            short = True
        else:
            short = path.length_raw * (view.tp - view.tq) <= 4 * path.phi_raw

        snap2_ys = snap2_yr = offline_after = None
        if self.capture:
            snap2_ys = tuple(self.y_server)
            snap2_yr = tuple(self.y_request)
            offline_after = tuple(self.match_of_request)

        trace = PhaseTrace(
            phase=phase_no,
            request=r_i,
            server=terminal,
            path=path,
            tree_servers=tuple(tree_servers),
            tree_requests=tuple(tree_requests),
            short=short,
            sr_lo_raw=sr_lo,
            sr_hi_raw=sr_hi,
            snap1_y_server=snap1_ys,
            snap1_y_request=snap1_yr,
            snap1_y_max=snap1_ym,
            snap2_y_server=snap2_ys,
            snap2_y_request=snap2_yr,
            offline_after=offline_after,
        )
        self.phases.append(trace)
        return trace

    def steps(self) -> Iterator[PhaseTrace]:
        while not self.done:
            yield self.process_next()

    def run(self) -> RunTrace:
        for _ in self.steps():
            pass
        return RunTrace(
            instance=self.instance,
            t=self.t,
            view=self.view,
            phases=self.phases,
            offline_final=tuple(self.match_of_request),
            server_match_phase=tuple(self.server_match_phase),
            capture=self.capture,
        )


def run_online(instance: Instance, t: Fraction | None = None,
               mode: str = "exact", capture: bool = True) -> RunTrace:
    """Process all arrivals in order and return the full trace."""
    return OnlineMatcher(instance, t=t, mode=mode, capture=capture).run()


def classify_edge(trace: RunTrace, phase: PhaseTrace) -> str:
    """Short iff the phase path satisfies length <= 4/(t-1) * t-net-cost."""
    return "short" if phase.short else "long"


def export_trace(trace: RunTrace, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(trace.to_json_dict(), handle, indent=2, sort_keys=True)
        handle.write("\n")
