"""Shared builders for synthetic graphs, profiles, topologies and instances.

Random instances use dyadic-rational times/latencies and power-of-two
bandwidths so that every cost is an exact float sum; oracle and production
values can then be compared without rounding slack.
"""

from __future__ import annotations

import json
import random

import pytest

from scission.graph import DnnGraph, PartitionSchema, find_cut_points, parse_graph
from scission.network import TIER_ORDER, Link, Tier, Topology
from scission.profiles import ResourceProfile


def graph_doc(layers, edges, model_name="toy", reference_input_bytes=150000) -> str:
    return json.dumps({
        "model_name": model_name,
        "reference_input_bytes": reference_input_bytes,
        "layers": layers,
        "edges": [list(e) for e in edges],
    })


def linear_layers(n, output_bytes=None):
    """Layer entries for an n-layer chain: input, n-2 middles, softmax."""
    out = []
    for i in range(n):
        if i == 0:
            kind = "input"
        elif i == n - 1:
            kind = "softmax"
        else:
            kind = "convolution"
        size = output_bytes(i) if callable(output_bytes) else (output_bytes or 1000)
        out.append({"id": i, "name": f"l{i}", "kind": kind, "output_bytes": size})
    return out


def linear_graph(n, model_name="toy", reference_input_bytes=150000,
                 output_bytes=None) -> DnnGraph:
    edges = [(i, i + 1) for i in range(n - 1)]
    return parse_graph(graph_doc(linear_layers(n, output_bytes), edges,
                                 model_name, reference_input_bytes))


def make_profile(resource_id, tier, schema: PartitionSchema, times) -> ResourceProfile:
    if callable(times):
        unit_times = {u: times(u) for u in range(schema.num_units)}
    elif isinstance(times, dict):
        unit_times = dict(times)
    else:
        unit_times = {u: t for u, t in enumerate(times)}
    return ResourceProfile(resource_id=resource_id, tier=Tier(tier),
                           model_name=schema.model_name, runs=5,
                           unit_times=unit_times)


def full_mesh_links(resources, latency=0.01, bandwidth=1e7):
    links = []
    for a in resources:
        for b in resources:
            if a != b:
                links.append(Link(a, b, latency, bandwidth))
    return links


def make_topology(resources_per_tier: dict[str, list[str]], source=None,
                  links=None, latency=0.01, bandwidth=1e7) -> Topology:
    tiers = [t for t in TIER_ORDER if t.value in resources_per_tier]
    resources = {t: resources_per_tier[t.value] for t in tiers}
    all_ids = [rid for t in tiers for rid in resources[t]]
    if source is None:
        source = all_ids[0]
    if links is None:
        links = full_mesh_links(all_ids, latency, bandwidth)
    return Topology(tiers, resources, source, links)


def dyadic(rng: random.Random, scale_bits=16, max_bits=14) -> float:
    """Random non-negative multiple of 2**-scale_bits; exact in float64."""
    return rng.randrange(0, 1 << max_bits) / (1 << scale_bits)


def random_instance(rng: random.Random, max_units=12, max_per_tier=2,
                    max_tiers=3):
    """Random (schema, topo, profiles) with exactly-summable costs."""
    n_layers = rng.randint(2, max_units)
    graph = linear_graph(
        n_layers, model_name="rnd",
        reference_input_bytes=rng.randrange(1, 1 << 20),
        output_bytes=lambda i: rng.randrange(1, 1 << 20),
    )
    schema = find_cut_points(graph)

    n_tiers = rng.randint(1, max_tiers)
    per_tier = {}
    for tier in TIER_ORDER[:n_tiers]:
        per_tier[tier.value] = [f"{tier.value}_{i}" for i in
                                range(rng.randint(1, max_per_tier))]
    all_ids = [rid for ids in per_tier.values() for rid in ids]
    source = rng.choice(all_ids)
    links = [Link(a, b, dyadic(rng, max_bits=12), float(2 ** rng.randint(20, 27)))
             for a in all_ids for b in all_ids if a != b]
    topo = make_topology(per_tier, source=source, links=links)

    profiles = {}
    for tier, ids in per_tier.items():
        for rid in ids:
            profiles[rid] = make_profile(
                rid, tier, schema, lambda u: dyadic(rng))
    return schema, topo, profiles


@pytest.fixture
def toy_instance():
    """4-unit linear model over one resource per tier, deterministic numbers."""
    graph = linear_graph(4, reference_input_bytes=100000,
                         output_bytes=lambda i: (i + 1) * 10000)
    schema = find_cut_points(graph)
    topo = make_topology(
        {"device": ["dev"], "edge": ["edge1"], "cloud": ["cloud1"]},
        source="dev",
        links=[
            Link("dev", "edge1", 0.010, 1e7),
            Link("dev", "cloud1", 0.050, 5e6),
            Link("edge1", "cloud1", 0.025, 5e7),
        ],
    )
    profiles = {
        "dev": make_profile("dev", "device", schema, [0.05, 0.40, 0.30, 0.20]),
        "edge1": make_profile("edge1", "edge", schema, [0.01, 0.08, 0.06, 0.04]),
        "cloud1": make_profile("cloud1", "cloud", schema, [0.005, 0.02, 0.015, 0.01]),
    }
    return graph, schema, topo, profiles
