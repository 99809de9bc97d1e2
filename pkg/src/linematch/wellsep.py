"""Well-separated inputs and well-aligned matchings on a line.

A well-separated input confines servers to two flanking intervals around a
central gap of width delta, with requests anywhere in the hull.  Matching
edges then split into close (both endpoints in one flank neighbourhood),
far (endpoints in opposite flank neighbourhoods), and medium (request in
the central region).  The per-level online matchings extracted from a run
are of exactly this shape, which is what makes their cost controllable.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .core import InstanceError, Scalar
from .engine import RunTrace
from .offline import sorted_pair_cost
from .regions import LevelKStructure, Region, TheoremViolation


@dataclass(frozen=True)
class WellSepFrame:
    """Geometry of one well-separated configuration.

    All intervals are derived exactly from (delta, eps); ``offset`` maps raw
    coordinates into frame coordinates by addition, placing the central gap
    at [0, delta].
    """

    delta: Scalar
    eps: Scalar
    offset: Scalar = Fraction(0)

    def __post_init__(self):
        if self.delta <= 0:
            raise InstanceError(["frame width must be positive"])
        if not 0 < self.eps <= Fraction(1, 8):
            raise InstanceError(["separation parameter must lie in (0, 1/8]"])

    def translate(self, x):
        return x + self.offset

    @property
    def middle(self) -> Region:
        return Region(0 * self.delta, self.delta)

    @property
    def left(self) -> Region:
        return Region(-self.eps * self.delta, 0 * self.delta)

    @property
    def right(self) -> Region:
        return Region(self.delta, (1 + self.eps) * self.delta)

    @property
    def hull(self) -> Region:
        return Region(-self.eps * self.delta, (1 + self.eps) * self.delta)

    @property
    def left_band(self) -> Region:
        return Region(-self.eps * self.delta, self.eps * self.delta)

    @property
    def right_band(self) -> Region:
        return Region((1 - self.eps) * self.delta, (1 + self.eps) * self.delta)

    @property
    def center_band(self) -> Region:
        return Region(self.eps * self.delta, (1 - self.eps) * self.delta)


def is_well_separated(servers: Sequence, requests: Sequence,
                      frame: WellSepFrame) -> bool:
    """Servers confined to the two flanks, requests to the hull."""
    left, right, hull = frame.left, frame.right, frame.hull
    for s in servers:
        x = frame.translate(s)
        if not (left.closure_contains(x) or right.closure_contains(x)):
            return False
    return all(hull.closure_contains(frame.translate(r)) for r in requests)


@dataclass(frozen=True)
class ClassifiedMatching:
    """Matching edges split into close / far / medium groups.

    Each group holds (server_position, request_position) pairs in raw
    coordinates; boundary membership counts as inside throughout.
    """

    frame: WellSepFrame
    close: tuple[tuple[Scalar, Scalar], ...]
    far: tuple[tuple[Scalar, Scalar], ...]
    med: tuple[tuple[Scalar, Scalar], ...]

    def weight(self, group) -> Scalar:
        total = None
        for s, r in group:
            gap = abs(s - r)
            total = gap if total is None else total + gap
        return total if total is not None else Fraction(0)

    @property
    def w_close(self):
        return self.weight(self.close)

    @property
    def w_far(self):
        return self.weight(self.far)

    @property
    def w_med(self):
        return self.weight(self.med)


def edge_group(s, r, frame: WellSepFrame) -> str:
    """Tag one edge as close, far, or med.

    Tags are checked in that order, which resolves the boundary cases where
    the bands touch; an edge fitting no tag means the input was not
    well-separated.
    """
    lb, rb, cb = frame.left_band, frame.right_band, frame.center_band
    ts, tr = frame.translate(s), frame.translate(r)
    if (lb.closure_contains(ts) and lb.closure_contains(tr)) or \
            (rb.closure_contains(ts) and rb.closure_contains(tr)):
        return "close"
    if (lb.closure_contains(ts) and rb.closure_contains(tr)) or \
            (rb.closure_contains(ts) and lb.closure_contains(tr)):
        return "far"
    if cb.closure_contains(tr) and (
            frame.left.closure_contains(ts) or frame.right.closure_contains(ts)):
        return "med"
    raise InstanceError(
        [f"edge ({s},{r}) fits no group: input not well-separated"]
    )


def classify_edges(edges: Sequence[tuple], frame: WellSepFrame) -> ClassifiedMatching:
    """Split matching edges, given as (server_position, request_position)
    pairs in raw coordinates, into close / far / medium."""
    groups = {"close": [], "far": [], "med": []}
    for s, r in edges:
        groups[edge_group(s, r, frame)].append((s, r))
    return ClassifiedMatching(
        frame, tuple(groups["close"]), tuple(groups["far"]), tuple(groups["med"])
    )


def is_well_aligned(cm: ClassifiedMatching, frame: WellSepFrame) -> bool:
    """Close edges in the right band point right, in the left band left.

    Left means the server sits left of (or on) its request; zero-length
    edges satisfy both orientations.
    """
    for s, r in cm.close:
        ts, tr = frame.translate(s), frame.translate(r)
        if frame.right_band.closure_contains(ts) and \
                frame.right_band.closure_contains(tr):
            if ts < tr:
                return False
        else:
            if ts > tr:
                return False
    return True


@dataclass(frozen=True)
class WspcClaim:
    name: str
    lhs: Scalar
    rhs: Scalar

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs


@dataclass(frozen=True)
class WspcReport:
    lhs: Scalar
    rhs: Scalar
    claims: tuple[WspcClaim, ...]

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs and all(c.holds for c in self.claims)


def check_wspc(cm: ClassifiedMatching, frame: WellSepFrame,
               opt_cost: Scalar) -> WspcReport:
    """Cost bound for a well-aligned matching of a well-separated input:

        w(close) + w(med) <= (2/eps + 3) * opt + 4*eps/(1-2*eps) * w(far),

    compared exactly, together with the four finer claims its proof runs
    through, each evaluated with the offline oracle on the relevant point
    subsets.
    """
    if not is_well_aligned(cm, frame):
        raise InstanceError(["matching is not well-aligned for this frame"])
    eps, delta = frame.eps, frame.delta
    lhs = cm.w_close + cm.w_med
    rhs = (2 / eps + 3) * opt_cost + (4 * eps / (1 - 2 * eps)) * cm.w_far

    close_s = [s for s, _ in cm.close]
    close_r = [r for _, r in cm.close]
    far_s = [s for s, _ in cm.far]
    far_r = [r for _, r in cm.far]
    close_opt = sorted_pair_cost(close_s, close_r)
    cf_opt = sorted_pair_cost(close_s + far_s, close_r + far_r)
    claims = (
        WspcClaim("close-edges-are-optimal", cm.w_close, close_opt),
        WspcClaim("medium-cost-bound", cm.w_med, (1 / eps) * opt_cost),
        WspcClaim("close-far-opt-bound", cf_opt, (1 / eps + 3) * opt_cost),
        WspcClaim(
            "close-opt-versus-close-far-opt",
            close_opt - 4 * eps * delta * len(cm.far),
            cf_opt,
        ),
    )
    return WspcReport(lhs=lhs, rhs=rhs, claims=claims)


@dataclass(frozen=True)
class LevelExtraction:
    """One per-level sub-instance: frame, points, and classified matching."""

    level: int
    frame: WellSepFrame
    servers: tuple[Scalar, ...]
    requests: tuple[Scalar, ...]
    classified: ClassifiedMatching
    edge_phases: tuple[int, ...]


def extract_level_instances(structure: LevelKStructure, trace: RunTrace,
                            t=None) -> list[LevelExtraction]:
    """Turn each maximal region of a level into a well-separated instance.

    The frame comes from the minimal region of the growth chain: its length
    is the gap width, eps = 1/(32t), and the translation puts it at
    [0, delta].  The extracted point sets must be well-separated, the level
    matching well-aligned, and every far edge must be a long online edge;
    a failure of any of these is an engine bug.
    """
    if structure.level < 1:
        raise InstanceError(["extraction applies to levels >= 1 only"])
    if not trace.view.exact:
        raise InstanceError(["extraction requires an exact trace"])
    t = trace.t if t is None else Fraction(t)
    eps = 1 / (32 * t)
    out = []
    for item in structure.intervals:
        if not item.edge_phases:
            continue
        minimal = item.minimal.region
        if minimal.degenerate:
            raise TheoremViolation(
                "degenerate minimal region at a positive level",
                level=structure.level, node=item.minimal.uid,
            )
        frame = WellSepFrame(delta=minimal.length, eps=eps,
                             offset=-minimal.low)
        servers, requests, edges, long_flags = [], [], [], []
        for phase_no in item.edge_phases:
            phase = trace.phases[phase_no - 1]
            s_pos = trace.cost_value(trace.view.server_coords[phase.server])
            r_pos = trace.cost_value(trace.view.request_coords[phase.request])
            servers.append(s_pos)
            requests.append(r_pos)
            edges.append((s_pos, r_pos))
            long_flags.append(not phase.short)
        if not is_well_separated(servers, requests, frame):
            raise TheoremViolation(
                "extracted level instance is not well-separated",
                level=structure.level, maximal=item.maximal.uid,
            )
        classified = classify_edges(edges, frame)
        if not is_well_aligned(classified, frame):
            raise TheoremViolation(
                "extracted level matching is not well-aligned",
                level=structure.level, maximal=item.maximal.uid,
            )
        for (s_pos, r_pos), is_long in zip(edges, long_flags):
            if edge_group(s_pos, r_pos, frame) == "far" and not is_long:
                raise TheoremViolation(
                    "far edge of a level matching is a short online edge",
                    level=structure.level, edge=(s_pos, r_pos),
                )
        out.append(LevelExtraction(
            level=structure.level,
            frame=frame,
            servers=tuple(servers),
            requests=tuple(requests),
            classified=classified,
            edge_phases=item.edge_phases,
        ))
    return out
