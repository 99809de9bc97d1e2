"""Exact offline optimal matching oracles.

Three independent routes to the optimal cost on a line (sorted pairing, the
imbalance-times-gap decomposition, and a primal-dual search), plus a
same-orientation certificate.  The primal-dual route also covers general
metric tables.  The routes deliberately stay independent so they can check
one another.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .core import Instance, InstanceError, Scalar, matching_cost


@dataclass(frozen=True)
class IntervalDecomposition:
    """Consecutive-point intervals with prefix imbalances.

    ``pieces[j]`` is (low, high, length, imbalance) for the interval between
    the j-th and (j+1)-th smallest points of the combined instance, where
    imbalance counts how unevenly servers and requests split among the first
    j+1 sorted points.
    """

    pieces: tuple[tuple[Scalar, Scalar, Scalar, int], ...]

    @property
    def cost(self) -> Scalar:
        return sum((length * diff for _, _, length, diff in self.pieces), Fraction(0))


def optimal_line_matching(instance: Instance) -> list[tuple[int, int]]:
    """Pair the i-th smallest server with the i-th smallest request.

    Ties in coordinates are broken by original index; any tie-break yields
    the same cost.
    """
    if instance.metric != "line":
        raise InstanceError(["optimal_line_matching requires a line instance"])
    order_s = sorted(range(instance.n), key=lambda i: (instance.servers[i], i))
    order_r = sorted(range(instance.n), key=lambda j: (instance.requests[j], j))
    return [(s, r) for s, r in zip(order_s, order_r)]


def interval_decomposition_cost(
    instance: Instance,
) -> tuple[Scalar, IntervalDecomposition]:
    """Optimal line cost as the sum of gap lengths weighted by imbalance."""
    if instance.metric != "line":
        raise InstanceError(["interval decomposition requires a line instance"])
    points = [(x, 0) for x in instance.servers] + [(x, 1) for x in instance.requests]
    points.sort(key=lambda item: item[0])
    pieces = []
    balance = 0
    for j in range(len(points) - 1):
        balance += 1 if points[j][1] == 0 else -1
        low, high = points[j][0], points[j + 1][0]
        pieces.append((low, high, high - low, abs(balance)))
    decomposition = IntervalDecomposition(tuple(pieces))
    return decomposition.cost, decomposition


def sorted_pair_cost(servers: Sequence, requests: Sequence):
    """Optimal matching cost of two equal-size point multisets on a line.

    Works on any numeric type; used heavily on sub-instances during trace
    analysis where building a full Instance would be noise.
    """
    if len(servers) != len(requests):
        raise InstanceError(["point sets must have equal sizes"])
    total = None
    for a, b in zip(sorted(servers), sorted(requests)):
        gap = abs(a - b)
        total = gap if total is None else total + gap
    return total if total is not None else Fraction(0)


def exact_min_cost_matching(instance: Instance) -> list[tuple[int, int]]:
    """Minimum-cost perfect matching for any metric instance.

    Runs the primal-dual engine with t = 1, which reduces it to the classic
    exact assignment search, then verifies the optimality certificate:
    feasible duals with every matched edge tight.
    """
    from .engine import OnlineMatcher

    matcher = OnlineMatcher(instance, t=Fraction(1), capture=False)
    trace = matcher.run()
    pairs = sorted(
        (s, r) for r, s in enumerate(trace.offline_request_to_server) if s is not None
    )
    _assert_certificate(matcher)
    return pairs


def _assert_certificate(matcher) -> None:
    view = matcher.view
    n = view.n
    y_s, y_r = matcher.y_server, matcher.y_request
    for s in range(n):
        for r in range(n):
            d = view.dist(s, r)
            lhs = y_s[s] + y_r[r]
            if lhs > view.tp * d:
                raise AssertionError(
                    f"optimality certificate violated on pair ({s},{r})"
                )
            if matcher.match_of_request[r] == s and lhs != view.tq * d:
                raise AssertionError(
                    f"matched edge ({s},{r}) not tight in certificate"
                )


def check_opt_property(matching, instance: Instance) -> bool:
    """Same-orientation certificate for optimality of a line matching.

    True iff every positive-length interval between consecutive points is
    spanned only by left edges or only by right edges.  A matching passing
    this check has minimum cost.
    """
    if instance.metric != "line":
        raise InstanceError(["orientation certificate requires a line instance"])
    edges = [(instance.servers[s], instance.requests[r]) for s, r in matching]
    points = sorted(list(instance.servers) + list(instance.requests))
    for j in range(len(points) - 1):
        low, high = points[j], points[j + 1]
        if low == high:
            continue
        saw_left = saw_right = False
        for s_pos, r_pos in edges:
            if min(s_pos, r_pos) <= low and high <= max(s_pos, r_pos):
                if s_pos < r_pos:
                    saw_left = True
                elif s_pos > r_pos:
                    saw_right = True
        if saw_left and saw_right:
            return False
    return True


def brute_force_optimal_cost(instance: Instance) -> Scalar:
    """n!-enumeration of all perfect matchings; oracle for tiny instances."""
    from itertools import permutations

    if instance.n > 8:
        raise InstanceError(["brute force bounded to n <= 8"])
    best = None
    for perm in permutations(range(instance.n)):
        cost = matching_cost(instance, list(enumerate(perm)))
        if best is None or cost < best:
            best = cost
    return best


def optimal_cost(instance: Instance) -> Scalar:
    """Exact optimal cost by the cheapest applicable route."""
    if instance.metric == "line":
        cost, _ = interval_decomposition_cost(instance)
        return cost
    return matching_cost(instance, exact_min_cost_matching(instance))
