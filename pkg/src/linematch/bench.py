"""Instance generators, a greedy baseline, and experiment orchestration.

Generators are deterministic in (kind, n, seed); random coordinates are
dyadic rationals (k / 2^32) so exact arithmetic stays cheap.  Experiments
emit one CSV row per run; identical configurations produce byte-identical
files.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import random
from dataclasses import dataclass
from fractions import Fraction

from .core import Instance, InstanceError, Scalar, format_scalar, parse_scalar
from .engine import run_online
from .offline import optimal_cost, sorted_pair_cost
from .regions import assign_edge_levels, build_genealogy
from .verify import check_all_lemmas, check_invariants

GENERATOR_KINDS = ("uniform", "perturbed-permutation", "cluster-gap")

_GRANULARITY = 2 ** 32


def _rng_for(kind: str, n: int, seed: int) -> random.Random:
    digest = hashlib.sha256(f"{kind}|{n}|{seed}".encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def _dyadic(rng: random.Random) -> Fraction:
    return Fraction(rng.getrandbits(32), _GRANULARITY)


# Greedy-hostile building block for cluster-gap instances.  The arrivals
# walk toward the far anchor server; the nearest-free rule burns the anchor
# on the third request, while the net-cost search rematches leftward and
# keeps the anchor for the final request that lands exactly on it.
_BLOCK_SERVERS = (-1, 6, 15, 22)
_BLOCK_REQUESTS = (15, 5, 11, 22)
_BLOCK_SCALE = 8
_BLOCK_PITCH = 400


def generate(kind: str, n: int, seed: int, t=Fraction(3)) -> Instance:
    """Deterministic random instance of one of the supported families.

    uniform: both sides i.i.d. on [0, 1).
    perturbed-permutation: servers on the integers 0..n-1, request i at
    i + delta_i with delta_i uniform in (-1/2, 1/2), arrival order 0..n-1.
    cluster-gap: two clusters of anchored four-point blocks (jittered per
    seed) normalized to width 1 and separated by an empty gap of length n;
    the blocks chain rematches through earlier edges and punish the greedy
    baseline, and the two scales spread search regions over many levels.
    """
    if n < 1:
        raise InstanceError(["n must be at least 1"])
    rng = _rng_for(kind, n, seed)
    t = Fraction(t)
    if kind == "uniform":
        servers = tuple(_dyadic(rng) for _ in range(n))
        requests = tuple(_dyadic(rng) for _ in range(n))
        return Instance(t=t, servers=servers, requests=requests)
    if kind == "perturbed-permutation":
        servers = tuple(Fraction(i) for i in range(n))
        deltas = []
        while len(deltas) < n:
            bits = rng.getrandbits(32)
            if bits == 0:  # keep the perturbation interval open
                continue
            deltas.append(Fraction(bits, _GRANULARITY) - Fraction(1, 2))
        requests = tuple(Fraction(i) + d for i, d in enumerate(deltas))
        return Instance(t=t, servers=servers, requests=requests)
    if kind == "cluster-gap":
        blocks = n // 4
        pads = n - 4 * blocks
        left_blocks = (blocks + 1) // 2
        per_side = max(left_blocks, blocks - left_blocks, 1)
        span = Fraction(per_side * _BLOCK_PITCH + _BLOCK_PITCH)
        gap_offset = Fraction(1 + n)

        def jitter() -> Fraction:
            return Fraction(rng.getrandbits(31), _GRANULARITY)  # [0, 1/2)

        servers, requests = [], []
        for b in range(blocks):
            if b < left_blocks:
                base, shift = Fraction(b * _BLOCK_PITCH + 10), Fraction(0)
            else:
                base = Fraction((b - left_blocks) * _BLOCK_PITCH + 10)
                shift = gap_offset
            for x in _BLOCK_SERVERS:
                servers.append(shift + (base + _BLOCK_SCALE * x + jitter()) / span)
            for x in _BLOCK_REQUESTS:
                requests.append(shift + (base + _BLOCK_SCALE * x + jitter()) / span)
        for p in range(pads):  # coincident-ish filler pairs, near-zero cost
            base = Fraction(per_side * _BLOCK_PITCH + 50 + p)
            servers.append((base + jitter()) / span)
            requests.append((base + jitter()) / span)
        return Instance(t=t, servers=tuple(servers), requests=tuple(requests))
    raise InstanceError([f"unknown generator kind {kind!r}"])


def greedy_online(instance: Instance, mode: str = "exact") -> list[tuple[int, int]]:
    """Match each arrival to its nearest free server, ties to the smaller
    index."""
    n = instance.n
    if mode == "float" and instance.metric == "line":
        servers = [float(x) for x in instance.servers]
        requests = [float(x) for x in instance.requests]

        def dist(s, r):
            return abs(servers[s] - requests[r])
    else:
        dist = instance.distance
    free = list(range(n))
    pairs = []
    for r in range(n):
        best = min(free, key=lambda s: (dist(s, r), s))
        free.remove(best)
        pairs.append((best, r))
    return pairs


@dataclass(frozen=True)
class ExperimentConfig:
    kinds: tuple[str, ...]
    n_values: tuple[int, ...]
    seeds: int
    t: Fraction = Fraction(3)
    arithmetic: str = "exact"
    verify_every_run: bool = False

    def __post_init__(self):
        violations = []
        for kind in self.kinds:
            if kind not in GENERATOR_KINDS:
                violations.append(f"unknown generator kind {kind!r}")
        if any(n < 1 for n in self.n_values):
            violations.append("n values must be at least 1")
        if self.seeds < 1:
            violations.append("seeds must be at least 1")
        if self.arithmetic not in ("exact", "float"):
            violations.append(f"unknown arithmetic mode {self.arithmetic!r}")
        if self.t <= 1:
            violations.append("t must exceed 1")
        if violations:
            raise InstanceError(violations)


def config_from_dict(raw: dict) -> ExperimentConfig:
    return ExperimentConfig(
        kinds=tuple(raw.get("kinds", ["uniform"])),
        n_values=tuple(int(n) for n in raw.get("n_values", [16])),
        seeds=int(raw.get("seeds", 1)),
        t=parse_scalar(raw.get("t", "3")),
        arithmetic=raw.get("arithmetic", "exact"),
        verify_every_run=bool(raw.get("verify_every_run", False)),
    )


def load_config(path: str) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as handle:
        return config_from_dict(json.load(handle))


CSV_HEADER = ("id,kind,n,seed,w_online,w_opt,ratio,ratio_norm,max_level,"
              "short_cost_frac,greedy_cost,checks_passed")


@dataclass(frozen=True)
class ResultRow:
    instance_id: str
    kind: str
    n: int
    seed: int
    w_online: str
    w_opt: str
    ratio: str
    ratio_norm: float
    max_level: str
    short_cost_frac: str
    greedy_cost: str
    checks_passed: str

    def to_csv_fields(self) -> list[str]:
        return [
            self.instance_id, self.kind, str(self.n), str(self.seed),
            self.w_online, self.w_opt, self.ratio, repr(self.ratio_norm),
            self.max_level, self.short_cost_frac, self.greedy_cost,
            self.checks_passed,
        ]


def run_single(kind: str, n: int, seed: int, t=Fraction(3),
               arithmetic: str = "exact",
               verify_every_run: bool = False) -> ResultRow:
    instance = generate(kind, n, seed, t=t)
    exact = arithmetic == "exact"
    capture = verify_every_run and exact
    trace = run_online(instance, mode=arithmetic, capture=capture)
    w_online = trace.w_online
    if exact:
        w_opt = optimal_cost(instance)
    else:
        w_opt = sorted_pair_cost([float(x) for x in instance.servers],
                                 [float(x) for x in instance.requests])
    if w_opt > 0:
        ratio = Fraction(w_online) / Fraction(w_opt) if exact \
            else w_online / w_opt
    else:
        ratio = Fraction(1) if exact else 1.0
    ratio_norm = float(ratio) / (1 + math.log2(n))

    max_level = ""
    if w_opt > 0:
        genealogy = build_genealogy(trace)
        levels = assign_edge_levels(trace, genealogy, w_opt)
        max_level = str(levels.max_level)

    w_short = None
    for phase in trace.phases:
        if phase.short:
            c = trace.online_edge_cost(phase)
            w_short = c if w_short is None else w_short + c
    if w_online == 0:
        short_frac = Fraction(1) if exact else 1.0
    elif w_short is None:
        short_frac = Fraction(0) if exact else 0.0
    else:
        short_frac = Fraction(w_short) / Fraction(w_online) if exact \
            else w_short / w_online

    greedy_pairs = greedy_online(instance, mode=arithmetic)
    if exact:
        greedy_cost = sum(
            (instance.distance(s, r) for s, r in greedy_pairs), Fraction(0)
        )
    else:
        servers = [float(x) for x in instance.servers]
        requests = [float(x) for x in instance.requests]
        greedy_cost = sum(abs(servers[s] - requests[r])
                          for s, r in greedy_pairs)

    checks = ""
    if verify_every_run and exact:
        report = check_invariants(trace)
        for result in check_all_lemmas(trace).checks:
            report.add(result)
        checks = "true" if report.passed else "false"

    fmt = format_scalar if exact else repr
    return ResultRow(
        instance_id=f"{kind}-{n}-{seed}",
        kind=kind,
        n=n,
        seed=seed,
        w_online=fmt(w_online),
        w_opt=fmt(w_opt),
        ratio=fmt(ratio),
        ratio_norm=ratio_norm,
        max_level=max_level,
        short_cost_frac=fmt(short_frac),
        greedy_cost=fmt(greedy_cost),
        checks_passed=checks,
    )


def run_experiment(config: ExperimentConfig) -> list[ResultRow]:
    """One row per (kind, n, seed), sorted; deterministic for a fixed
    config.  RM_ARITH=exact|float in the environment overrides the config's
    arithmetic mode."""
    arithmetic = os.environ.get("RM_ARITH", config.arithmetic)
    if arithmetic not in ("exact", "float"):
        raise InstanceError([f"unknown arithmetic mode {arithmetic!r}"])
    rows = []
    for kind in sorted(config.kinds):
        for n in sorted(config.n_values):
            for seed in range(config.seeds):
                rows.append(run_single(
                    kind, n, seed, t=config.t, arithmetic=arithmetic,
                    verify_every_run=config.verify_every_run,
                ))
    return rows


def rows_to_csv(rows: list[ResultRow]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_HEADER.split(","))
    for row in rows:
        writer.writerow(row.to_csv_fields())
    return buffer.getvalue()


def write_csv(rows: list[ResultRow], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(rows_to_csv(rows))
