"""Resource tiers, inter-resource links and the communication cost model.

Transfer cost over a link is ``latency + payload_bits / bandwidth``.
Decimal SI units throughout: 1 KB = 1000 B, 1 Mbps = 10^6 bit/s.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Iterable

from .errors import TopologyError


class Tier(str, Enum):
    DEVICE = "device"
    EDGE = "edge"
    CLOUD = "cloud"

    @property
    def rank(self) -> int:
        return _TIER_RANK[self]


TIER_ORDER = (Tier.DEVICE, Tier.EDGE, Tier.CLOUD)
_TIER_RANK = {t: i for i, t in enumerate(TIER_ORDER)}
TIER_NAMES = frozenset(t.value for t in TIER_ORDER)


def parse_tier(text: str) -> Tier:
    try:
        return Tier(text)
    except ValueError:
        raise TopologyError(f"unknown tier '{text}'") from None


# (latency seconds, bandwidth bits/second) of the built-in network profiles:
# measured national averages for mobile uplinks and home fibre, plus the
# assumed datacenter interconnect between edge and cloud.
_PRESETS: dict[str, tuple[float, float]] = {
    "3g": (0.067, 1.6e6),
    "4g": (0.055, 12.4e6),
    "wired": (0.020, 20e6),
    "edge-cloud": (0.025, 50e6),
}


def preset(name: str) -> tuple[float, float]:
    """Return (latency_s, bandwidth_bps) of a named link preset."""
    try:
        return _PRESETS[name]
    except KeyError:
        known = ", ".join(sorted(_PRESETS))
        raise TopologyError(f"unknown network preset '{name}' (known: {known})") from None


@dataclass(frozen=True)
class Link:
    from_resource: str
    to_resource: str
    latency_s: float
    bandwidth_bps: float

    def __post_init__(self):
        if self.latency_s < 0:
            raise TopologyError(f"link {self.from_resource}->{self.to_resource}: negative latency")
        if not self.bandwidth_bps > 0:
            raise TopologyError(f"link {self.from_resource}->{self.to_resource}: bandwidth must be positive")


def transfer_time(num_bytes: int, link: Link) -> float:
    """Seconds to move ``num_bytes`` over ``link``."""
    if num_bytes < 0:
        raise ValueError("num_bytes must be non-negative")
    return link.latency_s + (num_bytes * 8) / link.bandwidth_bps


class Topology:
    """Ordered tiers, their candidate resources, and directed links."""

    def __init__(self, tiers: Iterable[Tier], resources: dict[Tier, Iterable[str]],
                 source_resource: str, links: Iterable[Link]):
        self.tiers = tuple(tiers)
        if not self.tiers:
            raise TopologyError("topology must declare at least one tier")
        ranks = [t.rank for t in self.tiers]
        if len(set(self.tiers)) != len(self.tiers) or ranks != sorted(ranks):
            raise TopologyError("tiers must be an ordered subsequence of device, edge, cloud")

        self.resources: dict[Tier, tuple[str, ...]] = {}
        self._tier_of: dict[str, Tier] = {}
        for tier in self.tiers:
            rids = tuple(resources.get(tier, ()))
            if not rids:
                raise TopologyError(f"tier '{tier.value}' has no resources")
            for rid in rids:
                if rid in self._tier_of:
                    raise TopologyError(f"duplicate resource id '{rid}'")
                if rid in TIER_NAMES:
                    raise TopologyError(f"resource id '{rid}' collides with a tier name")
                self._tier_of[rid] = tier
            self.resources[tier] = rids
        for tier in resources:
            if tier not in self.resources:
                raise TopologyError(f"resources declared for undeclared tier '{tier}'")

        if source_resource not in self._tier_of:
            raise TopologyError(f"source resource '{source_resource}' is not a declared resource")
        self.source_resource = source_resource

        self.links: dict[tuple[str, str], Link] = {}
        for link in links:
            for endpoint in (link.from_resource, link.to_resource):
                if endpoint not in self._tier_of:
                    raise TopologyError(f"link references unknown resource '{endpoint}'")
            key = (link.from_resource, link.to_resource)
            if key[0] == key[1]:
                raise TopologyError(f"link from '{key[0]}' to itself")
            if key in self.links:
                raise TopologyError(f"duplicate link {key[0]}->{key[1]}")
            self.links[key] = link

    def tier_of(self, resource_id: str) -> Tier:
        try:
            return self._tier_of[resource_id]
        except KeyError:
            raise TopologyError(f"unknown resource '{resource_id}'") from None

    def all_resources(self) -> tuple[str, ...]:
        return tuple(rid for tier in self.tiers for rid in self.resources[tier])

    def has_link(self, from_resource: str, to_resource: str) -> bool:
        return (from_resource, to_resource) in self.links

    def link(self, from_resource: str, to_resource: str) -> Link:
        try:
            return self.links[(from_resource, to_resource)]
        except KeyError:
            raise TopologyError(f"missing link {from_resource}->{to_resource}") from None


def parse_topology(document: str) -> Topology:
    """Parse and validate a topology document."""
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise TopologyError(f"malformed topology document: {exc}") from exc
    if not isinstance(doc, dict):
        raise TopologyError("malformed topology document: top level must be an object")
    for key in ("tiers", "resources", "source", "links"):
        if key not in doc:
            raise TopologyError(f"malformed topology document: missing field '{key}'")

    tiers = [parse_tier(t) for t in doc["tiers"]]
    raw_resources = doc["resources"]
    if not isinstance(raw_resources, dict):
        raise TopologyError("resources must map tier names to resource id lists")
    resources = {parse_tier(t): list(rids) for t, rids in raw_resources.items()}

    links = [_parse_link(entry) for entry in doc["links"]]
    return Topology(tiers, resources, doc["source"], links)


def _parse_link(entry) -> Link:
    if not isinstance(entry, dict) or "from" not in entry or "to" not in entry:
        raise TopologyError(f"malformed link entry: {entry!r}")
    frm, to = entry["from"], entry["to"]
    if "preset" in entry:
        latency_s, bandwidth_bps = preset(entry["preset"])
        if "bandwidth_mbps" in entry:
            bandwidth_bps = float(entry["bandwidth_mbps"]) * 1e6
    elif "latency_ms" in entry:
        if "bandwidth_mbps" not in entry:
            raise TopologyError(f"link {frm}->{to}: bandwidth_mbps required with latency_ms")
        latency_s = float(entry["latency_ms"]) / 1000.0
        bandwidth_bps = float(entry["bandwidth_mbps"]) * 1e6
    else:
        raise TopologyError(f"link {frm}->{to}: needs either 'preset' or 'latency_ms'")
    return Link(frm, to, latency_s, bandwidth_bps)


def load_topology(path) -> Topology:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_topology(fh.read())


def validate_for_planning(topo: Topology) -> None:
    """Check that every link any pipeline may need exists.

    Required links: source to every other resource (the input transfer), and
    every ordered pair of resources in distinct ascending tiers (pipelines may
    adjoin any two such resources).
    """
    missing: list[tuple[str, str]] = []
    src = topo.source_resource
    for rid in topo.all_resources():
        if rid != src and not topo.has_link(src, rid):
            missing.append((src, rid))
    for i, tier_a in enumerate(topo.tiers):
        for tier_b in topo.tiers[i + 1:]:
            for ra in topo.resources[tier_a]:
                for rb in topo.resources[tier_b]:
                    if not topo.has_link(ra, rb) and (ra, rb) not in missing:
                        missing.append((ra, rb))
    if missing:
        pairs = ", ".join(f"{a}->{b}" for a, b in missing)
        raise TopologyError(f"missing links required for planning: {pairs}")
