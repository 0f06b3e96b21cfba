import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scission.errors import SearchError
from scission.graph import find_cut_points
from scission.network import Link, Tier, preset
from scission.profiles import native_time
from scission.search import (
    Configuration, count_configurations, enumerate_configurations, evaluate,
    parse_configuration, rank, top_configurations,
)

import oracle
from conftest import (
    dyadic, linear_graph, make_profile, make_topology, random_instance,
)


def evaluate_all(schema, topo, profiles):
    configs = []
    for config in enumerate_configurations(schema, topo):
        config.metrics = evaluate(config, schema, profiles, topo)
        configs.append(config)
    return configs


class TestEnumerate:
    def test_single_cut_three_tiers(self):
        # 3 natives + 3 two-tier pipelines x C(1,1) + 0 three-tier = 6
        schema = find_cut_points(linear_graph(3))
        topo = make_topology({"device": ["d0"], "edge": ["e0"], "cloud": ["c0"]})
        configs = list(enumerate_configurations(schema, topo))
        assert len(configs) == 6
        assert len(oracle.enumerate_all(schema, topo, _profiles_for(topo, schema))) == 6

    def test_single_tier_all_native(self):
        schema = find_cut_points(linear_graph(10))
        topo = make_topology({"edge": ["e0", "e1", "e2"]})
        configs = list(enumerate_configurations(schema, topo))
        assert len(configs) == 3
        assert all(c.is_native for c in configs)

    def test_resnet_scale_count(self):
        # P=23: 3 + 3*23 + C(23,2) = 325
        schema = find_cut_points(linear_graph(25))
        assert len(schema.cut_points) == 23
        topo = make_topology({"device": ["d0"], "edge": ["e0"], "cloud": ["c0"]})
        assert sum(1 for _ in enumerate_configurations(schema, topo)) == 325
        assert count_configurations(23, [1, 1, 1]) == 325

    def test_closed_form_matches_stream_small_sweep(self):
        for p in range(0, 7):
            schema = find_cut_points(linear_graph(p + 2))
            for tiers in range(1, 4):
                for per in range(1, 4):
                    names = {t.value: [f"{t.value}_{i}" for i in range(per)]
                             for t in (Tier.DEVICE, Tier.EDGE, Tier.CLOUD)[:tiers]}
                    topo = make_topology(names, links=[])
                    streamed = sum(1 for _ in enumerate_configurations(schema, topo))
                    assert streamed == count_configurations(p, [per] * tiers)

    def test_segments_are_valid(self):
        rng = random.Random(11)
        schema, topo, _ = random_instance(rng)
        cuts = set(schema.cut_points)
        for config in enumerate_configurations(schema, topo):
            assert config.segments[0].unit_start == 0
            assert config.segments[-1].unit_end == schema.num_units - 1
            for a, b in zip(config.segments, config.segments[1:]):
                assert b.unit_start == a.unit_end + 1
                assert a.unit_end in cuts
                assert a.tier.rank < b.tier.rank


def _profiles_for(topo, schema, value=0.01):
    return {rid: make_profile(rid, topo.tier_of(rid).value, schema,
                              [value] * schema.num_units)
            for rid in topo.all_resources()}


class TestEvaluate:
    def test_native_on_source_is_native_time(self, toy_instance):
        _, schema, topo, profiles = toy_instance
        config = parse_configuration("dev:0-3", schema, topo)
        m = evaluate(config, schema, profiles, topo)
        assert m.end_to_end_s == native_time(profiles["dev"])
        assert m.per_hop_transfer == ()
        assert m.total_transfer_bytes == 0

    def test_two_segment_hand_computation(self, toy_instance):
        _, schema, topo, profiles = toy_instance
        config = parse_configuration("dev:0-1 | edge1:2-3", schema, topo)
        m = evaluate(config, schema, profiles, topo)
        # dev computes units 0-1: 0.05+0.40; edge1 units 2-3: 0.06+0.04;
        # hop moves unit 1's tensor (20000 B) over the 0.010s/10Mbps link.
        assert m.per_resource_compute_s["dev"] == pytest.approx(0.45, abs=1e-12)
        assert m.per_resource_compute_s["edge1"] == pytest.approx(0.10, abs=1e-12)
        (hop,) = m.per_hop_transfer
        assert hop.payload_bytes == 20000
        assert hop.seconds == pytest.approx(0.010 + 20000 * 8 / 1e7, abs=1e-12)
        assert m.end_to_end_s == pytest.approx(0.576, abs=1e-9)
        assert m.total_transfer_bytes == 20000

    def test_input_hop_over_3g_contributes_817ms(self):
        graph = linear_graph(4, reference_input_bytes=150_000)
        schema = find_cut_points(graph)
        topo = make_topology(
            {"device": ["dev"], "cloud": ["cloud_1"]}, source="dev",
            links=[Link("dev", "cloud_1", *preset("3g"))])
        profiles = _profiles_for(topo, schema)
        config = parse_configuration("cloud_1:0-3", schema, topo)
        m = evaluate(config, schema, profiles, topo)
        (hop,) = m.per_hop_transfer
        assert hop.from_resource == "dev"
        assert hop.payload_bytes == 150_000
        assert hop.seconds == pytest.approx(0.817, abs=1e-9)
        assert m.end_to_end_s == pytest.approx(native_time(profiles["cloud_1"]) + 0.817,
                                               abs=1e-9)

    def test_metrics_identity(self):
        rng = random.Random(5)
        for _ in range(20):
            schema, topo, profiles = random_instance(rng)
            for config in evaluate_all(schema, topo, profiles):
                m = config.metrics
                total = sum(m.per_resource_compute_s.values()) + \
                    sum(h.seconds for h in m.per_hop_transfer)
                assert m.end_to_end_s == pytest.approx(total, abs=1e-9)
                assert m.total_transfer_bytes == sum(
                    h.payload_bytes for h in m.per_hop_transfer)

    def test_missing_profile(self, toy_instance):
        _, schema, topo, profiles = toy_instance
        config = parse_configuration("edge1:0-3", schema, topo)
        del profiles["edge1"]
        with pytest.raises(SearchError, match="missing profile for resource 'edge1'"):
            evaluate(config, schema, profiles, topo)

    def test_return_transfer_flag(self, toy_instance):
        _, schema, topo, profiles = toy_instance
        topo.links[("edge1", "dev")] = Link("edge1", "dev", 0.010, 1e7)
        config = parse_configuration("edge1:0-3", schema, topo)
        base = evaluate(config, schema, profiles, topo)
        full = evaluate(config, schema, profiles, topo, include_return_transfer=True)
        assert len(full.per_hop_transfer) == len(base.per_hop_transfer) + 1
        back = full.per_hop_transfer[-1]
        assert back.payload_bytes == schema.units[-1].boundary_output_bytes
        assert full.end_to_end_s > base.end_to_end_s


class TestRank:
    def test_ascending_by_latency(self, toy_instance):
        _, schema, topo, profiles = toy_instance
        a = parse_configuration("dev:0-3", schema, topo)
        b = parse_configuration("cloud1:0-3", schema, topo)
        a.metrics = evaluate(a, schema, profiles, topo)
        b.metrics = evaluate(b, schema, profiles, topo)
        assert a.metrics.end_to_end_s > b.metrics.end_to_end_s
        assert rank([a, b], "latency") == [b, a]

    def test_tie_prefers_fewer_segments(self):
        # all-zero compute and free links make every configuration cost 0.0
        graph = linear_graph(4, reference_input_bytes=1000)
        schema = find_cut_points(graph)
        topo = make_topology({"device": ["d0"], "edge": ["e0"]},
                             source="d0", latency=0.0, bandwidth=math.inf)
        profiles = _profiles_for(topo, schema, value=0.0)
        configs = evaluate_all(schema, topo, profiles)
        best = rank(configs, "latency", 1)[0]
        assert best.is_native
        # among the two equal natives, smaller transfer wins: the source
        assert best.segments[0].resource_id == "d0"

    def test_random_instance_matches_full_sort_oracle(self):
        rng = random.Random(23)
        graph = linear_graph(8, reference_input_bytes=rng.randrange(1, 1 << 20),
                             output_bytes=lambda i: rng.randrange(1, 1 << 20))
        schema = find_cut_points(graph)
        topo = make_topology(
            {"device": ["d0"], "edge": ["e0", "e1"], "cloud": ["c0"]},
            source="d0",
            links=[Link(a, b, dyadic(rng, max_bits=12), float(2 ** rng.randint(20, 27)))
                   for a in ("d0", "e0", "e1", "c0") for b in ("d0", "e0", "e1", "c0")
                   if a != b])
        profiles = {rid: make_profile(rid, topo.tier_of(rid).value, schema,
                                      [dyadic(rng) for _ in range(schema.num_units)])
                    for rid in topo.all_resources()}
        got = rank(evaluate_all(schema, topo, profiles), "latency", 3)
        want = oracle.rank_records(
            oracle.enumerate_all(schema, topo, profiles), "latency", 3)
        assert [oracle.config_fingerprint(c) for c in got] == \
            [oracle.record_fingerprint(r) for r in want]
        for config, rec in zip(got, want):
            assert config.metrics.end_to_end_s == pytest.approx(rec.end_to_end, abs=1e-9)

    def test_objective_validation(self):
        with pytest.raises(SearchError, match="unknown objective"):
            rank([], "energy")


class TestFusedPath:
    @pytest.mark.parametrize("objective", ["latency", "transfer"])
    def test_equals_unfused_pipeline(self, objective):
        rng = random.Random(99)
        for _ in range(15):
            schema, topo, profiles = random_instance(rng)
            fused = top_configurations(schema, topo, profiles,
                                       objective=objective, n=4)
            unfused = rank(evaluate_all(schema, topo, profiles), objective, 4)
            assert [oracle.config_fingerprint(c) for c in fused] == \
                [oracle.config_fingerprint(c) for c in unfused]
            for f, u in zip(fused, unfused):
                assert f.metrics.end_to_end_s == u.metrics.end_to_end_s

    def test_full_ranking_equals_unfused(self):
        rng = random.Random(41)
        schema, topo, profiles = random_instance(rng)
        fused = top_configurations(schema, topo, profiles, n=None)
        unfused = rank(evaluate_all(schema, topo, profiles), "latency", None)
        assert [oracle.config_fingerprint(c) for c in fused] == \
            [oracle.config_fingerprint(c) for c in unfused]

    def test_parallel_equals_sequential(self):
        rng = random.Random(17)
        for _ in range(5):
            schema, topo, profiles = random_instance(rng)
            seq = top_configurations(schema, topo, profiles, n=5, threads=1)
            par = top_configurations(schema, topo, profiles, n=5, threads=3)
            assert [c.description for c in seq] == [c.description for c in par]

    def test_metrics_are_materialized(self):
        rng = random.Random(1)
        schema, topo, profiles = random_instance(rng)
        for config in top_configurations(schema, topo, profiles, n=3):
            assert config.metrics is not None


def proportional_instance(rng):
    """Instance whose resources differ by a uniform speed factor, as real
    hardware tiers do; the zero-network optimum is then a native execution."""
    schema, topo, profiles = random_instance(rng)
    base = [dyadic(rng) for _ in range(schema.num_units)]
    speeds = {}
    for rid in topo.all_resources():
        speed = rng.randrange(1, 1 << 8) / (1 << 4)
        speeds[rid] = speed
        profiles[rid] = make_profile(rid, topo.tier_of(rid).value, schema,
                                     [t * speed for t in base])
    zero_links = [Link(a, b, 0.0, math.inf)
                  for a in topo.all_resources() for b in topo.all_resources() if a != b]
    topo_zero = make_topology(
        {t.value: list(topo.resources[t]) for t in topo.tiers},
        source=topo.source_resource, links=zero_links)
    return schema, topo_zero, profiles


class TestSearchProperties:
    def test_zero_network_limit(self):
        rng = random.Random(2024)
        for _ in range(30):
            schema, topo, profiles = proportional_instance(rng)
            best = top_configurations(schema, topo, profiles, n=1)[0]
            min_native = min(native_time(p) for p in profiles.values())
            assert best.is_native
            assert native_time(profiles[best.segments[0].resource_id]) == \
                pytest.approx(min_native, abs=1e-12)

    def test_zero_comm_native_equals_native_time_everywhere(self):
        rng = random.Random(321)
        schema, topo, profiles = proportional_instance(rng)
        for config in evaluate_all(schema, topo, profiles):
            if config.is_native:
                rid = config.segments[0].resource_id
                assert config.metrics.end_to_end_s == native_time(profiles[rid])

    def test_bandwidth_monotonicity(self):
        rng = random.Random(31)
        for _ in range(10):
            schema, topo, profiles = random_instance(rng)
            while not topo.links:
                schema, topo, profiles = random_instance(rng)
            link_key = rng.choice(sorted(topo.links))
            degraded = make_topology(
                {t.value: list(topo.resources[t]) for t in topo.tiers},
                source=topo.source_resource,
                links=[Link(l.from_resource, l.to_resource, l.latency_s,
                            l.bandwidth_bps / 2 if (l.from_resource, l.to_resource) == link_key
                            else l.bandwidth_bps)
                       for l in topo.links.values()])
            before = {}
            for config in evaluate_all(schema, topo, profiles):
                uses = any((h.from_resource, h.to_resource) == link_key
                           for h in config.metrics.per_hop_transfer)
                before[oracle.config_fingerprint(config)] = \
                    (config.metrics.end_to_end_s, uses)
            order_before = [oracle.config_fingerprint(c) for c in
                            rank(evaluate_all(schema, topo, profiles), "latency")]
            after_configs = evaluate_all(schema, degraded, profiles)
            for config in after_configs:
                fp = oracle.config_fingerprint(config)
                cost_before, uses = before[fp]
                if uses:
                    assert config.metrics.end_to_end_s >= cost_before
                else:
                    assert config.metrics.end_to_end_s == cost_before
            order_after = [oracle.config_fingerprint(c) for c in
                           rank(after_configs, "latency")]
            non_users = [fp for fp in order_before if not before[fp][1]]
            assert [fp for fp in order_after if not before[fp][1]] == non_users

    def test_segment_computes_sum_to_native_time(self):
        rng = random.Random(77)
        schema, topo, profiles = random_instance(rng, max_per_tier=1)
        for config in evaluate_all(schema, topo, profiles):
            for rid, prof in profiles.items():
                total = 0.0
                for seg in config.segments:
                    part = 0.0
                    for uid in range(seg.unit_start, seg.unit_end + 1):
                        part += prof.unit_times[uid]
                    total += part
                assert total == pytest.approx(native_time(prof), abs=1e-12)


class TestDescription:
    def test_round_trip(self):
        rng = random.Random(13)
        schema, topo, profiles = random_instance(rng)
        for config in enumerate_configurations(schema, topo):
            again = parse_configuration(config.description, schema, topo)
            assert again.segments == config.segments

    def test_single_layer_segment_format(self, toy_instance):
        _, schema, topo, _ = toy_instance
        config = parse_configuration("dev:0-2 | cloud1:3", schema, topo)
        assert config.description == "dev:0-2 | cloud1:3"

    def test_invalid_boundary_rejected(self, toy_instance):
        _, schema, topo, _ = toy_instance
        with pytest.raises(SearchError, match="not a valid cut point"):
            parse_configuration("dev:0 | cloud1:1-3", schema, topo)

    def test_descending_tiers_rejected(self, toy_instance):
        _, schema, topo, _ = toy_instance
        with pytest.raises(SearchError, match="ascending"):
            parse_configuration("cloud1:0-1 | dev:2-3", schema, topo)
