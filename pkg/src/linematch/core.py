"""Shared problem model: exact scalars, instances, matchings, and costs.

All coordinates, distances, dual weights, and costs are exact rationals
(`fractions.Fraction`).  Feasibility conditions in the matching engine are
equalities and inequalities that must hold exactly, so nothing in the primal
dual state is ever rounded.  A separate floating-point mode exists only for
large benchmark runs and never feeds the verification machinery.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Iterable, Mapping, Sequence, Union

Scalar = Fraction

ScalarLike = Union[int, str, Fraction]

# A matching is a collection of (server_index, request_index) pairs in which
# no server index and no request index repeats.
MatchingPairs = Iterable[tuple[int, int]]


class InstanceError(ValueError):
    """An external instance record violates one or more invariants.

    Carries every violation found, not just the first one.
    """

    def __init__(self, violations: Sequence[str]):
        self.violations = tuple(violations)
        super().__init__("; ".join(self.violations))


def parse_scalar(value: ScalarLike) -> Fraction:
    """Parse an exact rational from an int, a Fraction, or a "p/q" string."""
    if isinstance(value, bool):
        raise InstanceError([f"not a rational value: {value!r}"])
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError):
            raise InstanceError([f"not a rational value: {value!r}"]) from None
    # Floats are rejected on purpose: exact inputs only.
    raise InstanceError([f"not a rational value: {value!r}"])


def format_scalar(value) -> str:
    """Render a scalar as a decimal integer or "p/q" string."""
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return str(value.numerator)
        return f"{value.numerator}/{value.denominator}"
    return repr(value)


@dataclass(frozen=True)
class Instance:
    """A problem input: server locations, request arrivals, and parameter t.

    Line mode stores coordinates for both sides.  Table mode stores an
    n-by-n symmetric metric over n points; server i sits at point i and the
    j-th arrival sits at point ``request_points[j]``.
    """

    t: Fraction
    servers: tuple[Fraction, ...] | None = None
    requests: tuple[Fraction, ...] | None = None
    table: tuple[tuple[Fraction, ...], ...] | None = None
    request_points: tuple[int, ...] | None = None

    @property
    def metric(self) -> str:
        return "line" if self.table is None else "table"

    @property
    def n(self) -> int:
        if self.table is None:
            return len(self.servers)
        return len(self.table)

    def distance(self, s: int, r: int) -> Fraction:
        """Exact distance between server s and the r-th arrival."""
        if self.table is None:
            return abs(self.servers[s] - self.requests[r])
        return self.table[s][self.request_points[r]]

    def request_position(self, r: int) -> Fraction:
        if self.table is not None:
            raise InstanceError(["request positions undefined in table mode"])
        return self.requests[r]


def matching_cost(instance: Instance, matching: MatchingPairs) -> Fraction:
    """Total cost of a matching: the sum of its edge distances."""
    total = Fraction(0)
    seen_s: set[int] = set()
    seen_r: set[int] = set()
    for s, r in matching:
        if s in seen_s or r in seen_r:
            raise InstanceError([f"vertex repeated in matching at edge ({s},{r})"])
        seen_s.add(s)
        seen_r.add(r)
        total += instance.distance(s, r)
    return total


def validate_instance(raw: Mapping) -> Instance:
    """Build a validated Instance from a parsed external record.

    Collects every violated invariant and raises one InstanceError listing
    all of them, so a malformed file is diagnosed in a single pass.
    """
    violations: list[str] = []

    t = Fraction(3)
    if "t" in raw:
        try:
            t = parse_scalar(raw["t"])
        except InstanceError as exc:
            violations.extend(f"t: {v}" for v in exc.violations)
    if t <= 1:
        violations.append("t must exceed 1")

    metric = raw.get("metric", "line")
    if metric not in ("line", "table"):
        violations.append(f"unknown metric {metric!r}")
        raise InstanceError(violations)

    if metric == "line":
        servers = _parse_scalar_list(raw.get("servers"), "servers", violations)
        requests = _parse_scalar_list(raw.get("requests"), "requests", violations)
        if servers is not None and requests is not None:
            if len(servers) != len(requests):
                violations.append(
                    f"size mismatch: {len(servers)} servers vs {len(requests)} requests"
                )
            if len(servers) == 0:
                violations.append("instance must contain at least one server")
        if violations:
            raise InstanceError(violations)
        return Instance(t=t, servers=tuple(servers), requests=tuple(requests))

    table = _parse_table(raw.get("distance_table"), violations)
    points: list[int] | None = None
    raw_requests = raw.get("requests")
    if not isinstance(raw_requests, Sequence) or isinstance(raw_requests, str):
        violations.append("requests must be a list of point indices in table mode")
    else:
        points = []
        for k, item in enumerate(raw_requests):
            if isinstance(item, bool) or not isinstance(item, int):
                violations.append(f"requests[{k}] is not a point index")
            else:
                points.append(item)
    if table is not None and points is not None:
        n = len(table)
        if len(points) != n:
            violations.append(f"size mismatch: {n} table points vs {len(points)} requests")
        for k, p in enumerate(points):
            if not 0 <= p < n:
                violations.append(f"requests[{k}] index {p} out of range")
    if violations:
        raise InstanceError(violations)
    return Instance(t=t, table=table, request_points=tuple(points))


def _parse_scalar_list(raw, label: str, violations: list[str]):
    if not isinstance(raw, Sequence) or isinstance(raw, str):
        violations.append(f"{label} must be a list of rationals")
        return None
    out = []
    for k, item in enumerate(raw):
        try:
            out.append(parse_scalar(item))
        except InstanceError as exc:
            violations.extend(f"{label}[{k}]: {v}" for v in exc.violations)
    return out if len(out) == len(raw) else None


def _parse_table(raw, violations: list[str]):
    if not isinstance(raw, Sequence) or isinstance(raw, str):
        violations.append("distance_table must be a square matrix of rationals")
        return None
    rows = []
    n = len(raw)
    ok = True
    for i, row in enumerate(raw):
        if not isinstance(row, Sequence) or isinstance(row, str) or len(row) != n:
            violations.append(f"distance_table row {i} is not of length {n}")
            ok = False
            continue
        parsed = _parse_scalar_list(row, f"distance_table[{i}]", violations)
        if parsed is None:
            ok = False
        else:
            rows.append(tuple(parsed))
    if not ok or n == 0:
        if n == 0:
            violations.append("instance must contain at least one server")
        return None
    table = tuple(rows)
    for i in range(n):
        if table[i][i] != 0:
            violations.append(f"distance_table diagonal entry ({i},{i}) is nonzero")
        for j in range(i + 1, n):
            if table[i][j] != table[j][i]:
                violations.append(f"distance_table asymmetric at ({i},{j})")
            if table[i][j] < 0:
                violations.append(f"distance_table negative at ({i},{j})")
    for i in range(n):
        for j in range(n):
            for k in range(n):
                if table[i][j] + table[j][k] < table[i][k]:
                    violations.append(
                        f"triangle inequality fails for points ({i},{j},{k})"
                    )
                    return table
    return table


def instance_to_json_dict(instance: Instance) -> dict:
    out: dict = {"t": format_scalar(instance.t), "metric": instance.metric}
    if instance.metric == "line":
        out["servers"] = [format_scalar(x) for x in instance.servers]
        out["requests"] = [format_scalar(x) for x in instance.requests]
    else:
        out["distance_table"] = [
            [format_scalar(x) for x in row] for row in instance.table
        ]
        out["requests"] = list(instance.request_points)
    return out


def load_instance(path: str) -> Instance:
    with open(path, "r", encoding="utf-8") as handle:
        return validate_instance(json.load(handle))


def save_instance(instance: Instance, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(instance_to_json_dict(instance), handle, indent=2, sort_keys=True)
        handle.write("\n")


# ---------------------------------------------------------------------------
# Internal numeric views.
#
# The engine runs on an integer lattice: multiplying all coordinates by the
# common denominator D makes distances integers, and dual weights live in
# units of 1/(D*tq) where t = tp/tq.  Every quantity the search manipulates
# is then a plain Python int, which keeps the arithmetic exact and fast.
# Float mode reuses the same formulas with tp = t, tq = 1.


@dataclass(frozen=True)
class NumericView:
    """Instance data prepared for the engine in one arithmetic mode."""

    n: int
    tp: object  # int (exact) or float
    tq: object
    coord_den: object  # D: int (exact) or 1.0 (float)
    server_coords: tuple | None  # line mode only, D units
    request_coords: tuple | None
    table: tuple | None  # table mode, D units
    request_points: tuple[int, ...] | None
    exact: bool

    def dist(self, s: int, r: int):
        if self.table is None:
            return abs(self.server_coords[s] - self.request_coords[r])
        return self.table[s][self.request_points[r]]


def exact_view(instance: Instance, t: Fraction | None = None) -> NumericView:
    t = instance.t if t is None else Fraction(t)
    dens: list[int] = [1]
    if instance.metric == "line":
        dens += [x.denominator for x in instance.servers]
        dens += [x.denominator for x in instance.requests]
    else:
        dens += [x.denominator for row in instance.table for x in row]
    den = lcm(*dens)
    if instance.metric == "line":
        return NumericView(
            n=instance.n,
            tp=t.numerator,
            tq=t.denominator,
            coord_den=den,
            server_coords=tuple(int(x * den) for x in instance.servers),
            request_coords=tuple(int(x * den) for x in instance.requests),
            table=None,
            request_points=None,
            exact=True,
        )
    return NumericView(
        n=instance.n,
        tp=t.numerator,
        tq=t.denominator,
        coord_den=den,
        server_coords=None,
        request_coords=None,
        table=tuple(tuple(int(x * den) for x in row) for row in instance.table),
        request_points=instance.request_points,
        exact=True,
    )


def float_view(instance: Instance, t: Fraction | None = None) -> NumericView:
    t = instance.t if t is None else Fraction(t)
    if instance.metric == "line":
        return NumericView(
            n=instance.n,
            tp=float(t),
            tq=1.0,
            coord_den=1.0,
            server_coords=tuple(float(x) for x in instance.servers),
            request_coords=tuple(float(x) for x in instance.requests),
            table=None,
            request_points=None,
            exact=False,
        )
    return NumericView(
        n=instance.n,
        tp=float(t),
        tq=1.0,
        coord_den=1.0,
        server_coords=None,
        request_coords=None,
        table=tuple(tuple(float(x) for x in row) for row in instance.table),
        request_points=instance.request_points,
        exact=False,
    )
