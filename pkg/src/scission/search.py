"""Exhaustive enumeration, evaluation and ranking of partition configurations.

A configuration assigns contiguous unit ranges to an ascending pipeline of
resources (at most one per tier) with every split placed on a valid cut
point.  Enumeration is exhaustive; the latency budget is met by evaluating
each configuration in O(segments) from per-resource prefix sums of unit
times rather than materializing metrics objects, and by building full
metrics only for the configurations that survive ranking.  Fast-path values
and ``evaluate`` can disagree by float rounding of the same sums (prefix
difference versus direct summation); ordering is otherwise identical.
"""

from __future__ import annotations

import bisect
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations, product
from math import comb
from typing import Callable, Iterable, Iterator, Sequence

from .errors import SearchError
from .graph import PartitionSchema
from .network import Tier, Topology, transfer_time
from .profiles import ResourceProfile

OBJECTIVES = ("latency", "transfer")

Pipeline = tuple[tuple[str, Tier], ...]


@dataclass(frozen=True)
class Segment:
    resource_id: str
    tier: Tier
    unit_start: int
    unit_end: int
    layer_start: int
    layer_end: int

    def describe(self) -> str:
        if self.layer_start == self.layer_end:
            return f"{self.resource_id}:{self.layer_start}"
        return f"{self.resource_id}:{self.layer_start}-{self.layer_end}"


@dataclass(frozen=True)
class Hop:
    from_resource: str
    from_tier: Tier
    to_resource: str
    to_tier: Tier
    payload_bytes: int
    seconds: float


@dataclass
class ConfigMetrics:
    end_to_end_s: float
    per_resource_compute_s: dict[str, float]
    per_hop_transfer: tuple[Hop, ...]
    total_transfer_bytes: int


@dataclass
class Configuration:
    segments: tuple[Segment, ...]
    metrics: ConfigMetrics | None = None

    @property
    def is_native(self) -> bool:
        return len(self.segments) == 1

    @property
    def description(self) -> str:
        return " | ".join(seg.describe() for seg in self.segments)


def _tier_pipelines(topo: Topology) -> list[Pipeline]:
    """All resource pipelines: ascending tier subsequences, one resource each."""
    pipelines: list[Pipeline] = []
    for k in range(1, len(topo.tiers) + 1):
        for tier_combo in combinations(topo.tiers, k):
            for rids in product(*(topo.resources[t] for t in tier_combo)):
                pipelines.append(tuple(zip(rids, tier_combo)))
    return pipelines


def _segments_for(schema: PartitionSchema, pipe: Pipeline,
                  cuts: tuple[int, ...]) -> tuple[Segment, ...]:
    bounds = []
    start = 0
    for c in cuts:
        bounds.append((start, c))
        start = c + 1
    bounds.append((start, schema.num_units - 1))
    segments = []
    for (rid, tier), (a, b) in zip(pipe, bounds):
        la, lb = schema.layer_span(a, b)
        segments.append(Segment(rid, tier, a, b, la, lb))
    return tuple(segments)


def enumerate_configurations(schema: PartitionSchema,
                             topo: Topology) -> Iterator[Configuration]:
    """Yield every native and distributed configuration, without metrics."""
    cuts = schema.cut_points
    for pipe in _tier_pipelines(topo):
        for cut_sel in combinations(cuts, len(pipe) - 1):
            yield Configuration(_segments_for(schema, pipe, cut_sel))


def count_configurations(num_cut_points: int,
                         resources_per_tier: Sequence[int]) -> int:
    """Closed-form configuration count for P cut points and per-tier resource counts."""
    if num_cut_points < 0:
        raise ValueError("num_cut_points must be non-negative")
    counts = [c for c in resources_per_tier if c > 0]
    total = 0
    for k in range(1, len(counts) + 1):
        for combo in combinations(counts, k):
            choices = 1
            for c in combo:
                choices *= c
            total += choices * comb(num_cut_points, k - 1)
    return total


def evaluate(config: Configuration, schema: PartitionSchema,
             profiles: dict[str, ResourceProfile], topo: Topology,
             include_return_transfer: bool = False) -> ConfigMetrics:
    """Compute end-to-end latency and transfer metrics for one configuration.

    Compute time is the sum of unit times over each segment on its resource;
    each adjacent segment pair is charged one transfer of the boundary tensor;
    the input transfer is charged when the first resource is not the source.
    Returning the final classification to the source is not charged unless
    ``include_return_transfer`` is set.
    """
    computes: dict[str, float] = {}
    total = 0.0
    for seg in config.segments:
        prof = profiles.get(seg.resource_id)
        if prof is None:
            raise SearchError(f"missing profile for resource '{seg.resource_id}'")
        c = 0.0
        for uid in range(seg.unit_start, seg.unit_end + 1):
            c += prof.unit_times[uid]
        computes[seg.resource_id] = c
        total += c

    hops: list[Hop] = []
    first = config.segments[0]
    src = topo.source_resource
    if first.resource_id != src:
        link = topo.link(src, first.resource_id)
        secs = transfer_time(schema.reference_input_bytes, link)
        hops.append(Hop(src, topo.tier_of(src), first.resource_id, first.tier,
                        schema.reference_input_bytes, secs))
    for prev, nxt in zip(config.segments, config.segments[1:]):
        payload = schema.units[prev.unit_end].boundary_output_bytes
        link = topo.link(prev.resource_id, nxt.resource_id)
        hops.append(Hop(prev.resource_id, prev.tier, nxt.resource_id, nxt.tier,
                        payload, transfer_time(payload, link)))
    if include_return_transfer:
        last = config.segments[-1]
        if last.resource_id != src:
            payload = schema.units[-1].boundary_output_bytes
            link = topo.link(last.resource_id, src)
            hops.append(Hop(last.resource_id, last.tier, src, topo.tier_of(src),
                            payload, transfer_time(payload, link)))

    for hop in hops:
        total += hop.seconds
    return ConfigMetrics(
        end_to_end_s=total,
        per_resource_compute_s=computes,
        per_hop_transfer=tuple(hops),
        total_transfer_bytes=sum(h.payload_bytes for h in hops),
    )


class _RankKey:
    """Total ranking order: objective value, then fewer segments, then smaller
    total transfer, then lexicographic segment description.  The description
    is only built when the cheaper components tie."""

    __slots__ = ("value", "nseg", "bytes_", "_config", "_desc")

    def __init__(self, value, nseg, bytes_, config: Configuration):
        self.value = value
        self.nseg = nseg
        self.bytes_ = bytes_
        self._config = config
        self._desc = None

    @property
    def desc(self) -> str:
        if self._desc is None:
            self._desc = self._config.description
        return self._desc

    def __lt__(self, other: "_RankKey") -> bool:
        if self.value != other.value:
            return self.value < other.value
        if self.nseg != other.nseg:
            return self.nseg < other.nseg
        if self.bytes_ != other.bytes_:
            return self.bytes_ < other.bytes_
        return self.desc < other.desc


def _rank_key(config: Configuration, objective: str) -> _RankKey:
    m = config.metrics
    if m is None:
        raise SearchError("cannot rank a configuration without metrics")
    value = m.end_to_end_s if objective == "latency" else m.total_transfer_bytes
    return _RankKey(value, len(config.segments), m.total_transfer_bytes, config)


def rank(configs: Iterable[Configuration], objective: str = "latency",
         n: int | None = None) -> list[Configuration]:
    """Order evaluated configurations ascending by objective, deterministically."""
    if objective not in OBJECTIVES:
        raise SearchError(f"unknown objective '{objective}'")
    if n is not None and n < 1:
        raise SearchError("n must be positive")
    ordered = sorted(configs, key=lambda c: _rank_key(c, objective))
    return ordered if n is None else ordered[:n]


class _PlanContext:
    """Precomputed arrays for O(segments) evaluation of one instance."""

    def __init__(self, schema: PartitionSchema, topo: Topology,
                 profiles: dict[str, ResourceProfile]):
        self.schema = schema
        self.topo = topo
        self.profiles = profiles
        self.num_units = schema.num_units
        self.cuts = list(schema.cut_points)
        self.bytes_after = [u.boundary_output_bytes for u in schema.units]
        self.pipelines = _tier_pipelines(topo)

        self.prefix: dict[str, list[float]] = {}
        src = topo.source_resource
        self.in_time: dict[str, float] = {}
        self.in_bytes: dict[str, int] = {}
        for rid in topo.all_resources():
            prof = profiles.get(rid)
            if prof is None:
                raise SearchError(f"missing profile for resource '{rid}'")
            acc = 0.0
            pref = [0.0] * (self.num_units + 1)
            for uid in range(self.num_units):
                acc += prof.unit_times[uid]
                pref[uid + 1] = acc
            self.prefix[rid] = pref
            if rid == src:
                self.in_time[rid] = 0.0
                self.in_bytes[rid] = 0
            else:
                link = topo.link(src, rid)
                self.in_time[rid] = transfer_time(schema.reference_input_bytes, link)
                self.in_bytes[rid] = schema.reference_input_bytes

        self._hop_time: dict[tuple[str, str], list[float]] = {}

    def hop_time(self, frm: str, to: str) -> list[float]:
        """Transfer seconds of the boundary tensor after unit c, indexed by c."""
        key = (frm, to)
        cached = self._hop_time.get(key)
        if cached is None:
            link = self.topo.link(frm, to)
            lat, bw = link.latency_s, link.bandwidth_bps
            cached = [lat + (b * 8) / bw for b in self.bytes_after]
            self._hop_time[key] = cached
        return cached


class _Candidate:
    __slots__ = ("value", "nseg", "bytes_", "pipe", "cuts", "ctx", "_desc")

    def __init__(self, value, nseg, bytes_, pipe, cuts, ctx):
        self.value = value
        self.nseg = nseg
        self.bytes_ = bytes_
        self.pipe = pipe
        self.cuts = cuts
        self.ctx = ctx
        self._desc = None

    @property
    def desc(self) -> str:
        if self._desc is None:
            parts = []
            for seg in _segments_for(self.ctx.schema, self.pipe, self.cuts):
                parts.append(seg.describe())
            self._desc = " | ".join(parts)
        return self._desc

    def __lt__(self, other: "_Candidate") -> bool:
        if self.value != other.value:
            return self.value < other.value
        if self.nseg != other.nseg:
            return self.nseg < other.nseg
        if self.bytes_ != other.bytes_:
            return self.bytes_ < other.bytes_
        return self.desc < other.desc


class _TopN:
    """Bounded, sorted candidate collector (None bound keeps everything)."""

    __slots__ = ("n", "items")

    def __init__(self, n: int | None):
        self.n = n
        self.items: list[_Candidate] = []

    @property
    def worst_triple(self):
        if self.n is None or len(self.items) < self.n:
            return None
        worst = self.items[-1]
        return (worst.value, worst.nseg, worst.bytes_)

    def offer(self, cand: _Candidate) -> None:
        bisect.insort(self.items, cand)
        if self.n is not None and len(self.items) > self.n:
            self.items.pop()


Checker = Callable[[tuple[int, ...], tuple[float, ...], int], bool]


def _scan_pipeline(ctx: _PlanContext, pipe: Pipeline, objective: str,
                   checker: Checker | None, top: _TopN) -> None:
    latency = objective == "latency"
    U = ctx.num_units
    k = len(pipe)
    rids = [rid for rid, _ in pipe]
    prefs = [ctx.prefix[r] for r in rids]
    in_t = ctx.in_time[rids[0]]
    in_b = ctx.in_bytes[rids[0]]
    bytes_after = ctx.bytes_after

    if k == 1:
        p = prefs[0]
        val = p[U] + in_t
        if checker is None or checker((), (p[U],), in_b):
            key = val if latency else in_b
            wt = top.worst_triple
            if wt is None or (key, 1, in_b) <= wt:
                top.offer(_Candidate(key, 1, in_b, pipe, (), ctx))
        return

    if k == 2:
        p1, p2 = prefs
        t12 = ctx.hop_time(rids[0], rids[1])
        for c in ctx.cuts:
            tb = in_b + bytes_after[c]
            val = p1[c + 1] + (p2[U] - p2[c + 1]) + in_t + t12[c]
            if checker is not None and not checker(
                    (c,), (p1[c + 1], p2[U] - p2[c + 1]), tb):
                continue
            key = val if latency else tb
            wt = top.worst_triple
            if wt is None or (key, 2, tb) <= wt:
                top.offer(_Candidate(key, 2, tb, pipe, (c,), ctx))
        return

    if k == 3:
        p1, p2, p3 = prefs
        t12 = ctx.hop_time(rids[0], rids[1])
        t23 = ctx.hop_time(rids[1], rids[2])
        cuts = ctx.cuts
        for i, c1 in enumerate(cuts):
            s1 = p1[c1 + 1]
            b1 = in_b + bytes_after[c1]
            h1 = t12[c1]
            for c2 in cuts[i + 1:]:
                tb = b1 + bytes_after[c2]
                val = (s1 + (p2[c2 + 1] - p2[c1 + 1]) + (p3[U] - p3[c2 + 1])
                       + in_t + h1 + t23[c2])
                if checker is not None and not checker(
                        (c1, c2),
                        (s1, p2[c2 + 1] - p2[c1 + 1], p3[U] - p3[c2 + 1]), tb):
                    continue
                key = val if latency else tb
                wt = top.worst_triple
                if wt is None or (key, 3, tb) <= wt:
                    top.offer(_Candidate(key, 3, tb, pipe, (c1, c2), ctx))
        return

    raise SearchError(f"unsupported pipeline length {k}")


def _scan_many(ctx, pipes, objective, predicate, n):
    top = _TopN(n)
    for pipe in pipes:
        checker = None
        if predicate is not None:
            checker = predicate.for_pipeline(pipe)
            if checker is False:
                continue
            if checker is True:
                checker = None
        _scan_pipeline(ctx, pipe, objective, checker, top)
    return top.items


def top_configurations(schema: PartitionSchema, topo: Topology,
                       profiles: dict[str, ResourceProfile], *,
                       objective: str = "latency", n: int | None = 3,
                       predicate=None, threads: int = 0) -> list[Configuration]:
    """Fused enumerate/evaluate/filter/rank over one instance.

    Produces the same output as ranking the evaluated enumeration stream.
    ``predicate`` is an optional compiled constraint set exposing
    ``for_pipeline(pipe) -> False | True | checker``.  ``threads`` caps
    worker threads (0 = auto); results are identical at any thread count
    because partial top-N results merge under the same total order.
    """
    if objective not in OBJECTIVES:
        raise SearchError(f"unknown objective '{objective}'")
    if n is not None and n < 1:
        raise SearchError("n must be positive")
    ctx = _PlanContext(schema, topo, profiles)
    workers = _effective_workers(threads, len(ctx.pipelines))
    if workers <= 1:
        items = _scan_many(ctx, ctx.pipelines, objective, predicate, n)
    else:
        chunks = [ctx.pipelines[i::workers] for i in range(workers)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = pool.map(
                lambda pipes: _scan_many(ctx, pipes, objective, predicate, n),
                chunks)
            merged: list[_Candidate] = []
            for part in partials:
                merged.extend(part)
        items = sorted(merged)
        if n is not None:
            items = items[:n]

    results = []
    for cand in items:
        config = Configuration(_segments_for(schema, cand.pipe, cand.cuts))
        config.metrics = evaluate(config, schema, profiles, topo)
        results.append(config)
    return results


def _effective_workers(threads: int, num_pipelines: int) -> int:
    # the scan is GIL-bound; auto stays sequential, an explicit cap is honored
    if threads is None or threads <= 1:
        return 1
    return max(1, min(threads, num_pipelines))


def parse_configuration(text: str, schema: PartitionSchema,
                        topo: Topology) -> Configuration:
    """Rebuild a configuration from its segment description (round-trip)."""
    segments: list[Segment] = []
    expected_start = 0
    for part in text.split("|"):
        part = part.strip()
        rid, _, span = part.rpartition(":")
        if not rid:
            raise SearchError(f"malformed segment '{part}'")
        tier = topo.tier_of(rid)
        first, _, last = span.partition("-")
        try:
            layer_a = int(first)
            layer_b = int(last) if last else layer_a
        except ValueError:
            raise SearchError(f"malformed layer span '{span}'") from None
        unit_a = schema.unit_of_layer(layer_a)
        unit_b = schema.unit_of_layer(layer_b)
        la, lb = schema.layer_span(unit_a, unit_b)
        if (la, lb) != (layer_a, layer_b):
            raise SearchError(
                f"segment '{part}' does not start and end on unit boundaries")
        if unit_a != expected_start:
            raise SearchError(f"segment '{part}' is not contiguous with the previous one")
        segments.append(Segment(rid, tier, unit_a, unit_b, la, lb))
        expected_start = unit_b + 1
    if expected_start != schema.num_units:
        raise SearchError("segments do not cover all units")
    tiers = [seg.tier.rank for seg in segments]
    if tiers != sorted(set(tiers)):
        raise SearchError("segment tiers must be strictly ascending")
    for seg in segments[:-1]:
        if seg.unit_end not in schema.cut_points:
            raise SearchError(f"split after unit {seg.unit_end} is not a valid cut point")
    return Configuration(tuple(segments))
