"""Command-line front end: inspect graphs, plan partitions, answer queries.

Exit codes: 0 success, 1 data/validation error, 2 query error.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path

from .errors import QueryError, ScissionError
from .graph import PartitionSchema, find_cut_points, load_graph
from .network import Topology, load_topology, validate_for_planning
from .profiles import ResourceProfile, check_alignment, load_profile
from .query import CompiledQuery, parse_query, solve
from .search import Configuration, count_configurations, top_configurations


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except QueryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ScissionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scission",
        description="Plan DNN partition configurations across device, edge and cloud resources.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    instance = argparse.ArgumentParser(add_help=False)
    instance.add_argument("--graph", required=True, help="graph-interchange file")
    instance.add_argument("--profile", action="append", default=[],
                          help="profile-interchange file (repeat per resource)")
    instance.add_argument("--topology", required=True, help="topology file")
    instance.add_argument("--objective", choices=("latency", "transfer"),
                          default="latency")
    instance.add_argument("--top", type=int, default=3, metavar="N",
                          help="number of configurations to report")
    instance.add_argument("--csv", metavar="DIR",
                          help="also write configurations/segments/hops CSV files")

    plan = sub.add_parser("plan", parents=[instance],
                          help="rank all partition configurations")
    plan.set_defaults(func=cmd_plan)

    query = sub.add_parser("query", parents=[instance],
                           help="rank configurations satisfying a constraint query")
    query.add_argument("--query", required=True, metavar="TEXT")
    query.set_defaults(func=cmd_query)

    inspect = sub.add_parser("inspect", help="show execution units and cut points")
    inspect.add_argument("--graph", required=True)
    inspect.set_defaults(func=cmd_inspect)
    return parser


def _thread_cap() -> int:
    raw = os.environ.get("SCISSION_THREADS", "0")
    try:
        cap = int(raw)
    except ValueError:
        raise ScissionError(f"SCISSION_THREADS must be an integer, got {raw!r}") from None
    if cap < 0:
        raise ScissionError("SCISSION_THREADS must be non-negative")
    return cap


def _load_instance(args):
    graph = load_graph(args.graph)
    schema = find_cut_points(graph)
    topo = load_topology(args.topology)
    validate_for_planning(topo)

    profiles: dict[str, ResourceProfile] = {}
    for path in args.profile:
        prof = load_profile(path)
        if prof.resource_id in profiles:
            raise ScissionError(f"duplicate profile for resource '{prof.resource_id}' ({path})")
        check_alignment(prof, schema)
        if prof.tier != topo.tier_of(prof.resource_id):
            raise ScissionError(
                f"profile '{prof.resource_id}' declares tier '{prof.tier.value}' "
                f"but the topology places it in '{topo.tier_of(prof.resource_id).value}'")
        profiles[prof.resource_id] = prof
    for rid in topo.all_resources():
        if rid not in profiles:
            raise ScissionError(f"no profile given for resource '{rid}'")
    return graph, schema, topo, profiles


def cmd_plan(args) -> int:
    graph, schema, topo, profiles = _load_instance(args)
    if args.top < 1:
        raise ScissionError("--top must be positive")
    results = top_configurations(schema, topo, profiles, objective=args.objective,
                                 n=args.top, threads=_thread_cap())
    print(_render_report(graph, schema, topo, results, args.objective, args.top))
    if args.csv:
        _write_csv(Path(args.csv), results)
    return 0


def cmd_query(args) -> int:
    graph, schema, topo, profiles = _load_instance(args)
    if args.top < 1:
        raise ScissionError("--top must be positive")
    query = parse_query(args.query, topo,
                        default_objective=args.objective, default_n=args.top)
    compiled = CompiledQuery(query, schema, topo)
    results = solve(query, schema, profiles, topo, threads=_thread_cap())
    lines = [f'query="{args.query}"']
    for layer_id, unit_id, (la, lb) in compiled.place_resolutions:
        span = f"layer {la}" if la == lb else f"layers {la}-{lb}"
        lines.append(f"note: place({layer_id}, ...) pins unit {unit_id} ({span})")
    print("\n".join(lines))
    if not results:
        print("no configuration satisfies constraints")
        return 0
    print(_render_report(graph, schema, topo, results, query.objective, query.n))
    if args.csv:
        _write_csv(Path(args.csv), results)
    return 0


def cmd_inspect(args) -> int:
    graph = load_graph(args.graph)
    schema = find_cut_points(graph)
    lines = [
        f"model={schema.model_name}",
        f"layers={len(graph.layers)} cuts={len(schema.cut_points)} units={schema.num_units}",
        f"reference_input_bytes={schema.reference_input_bytes}",
        "cut positions (split after unit): "
        + (" ".join(str(c) for c in schema.cut_points) or "none"),
        "units:",
    ]
    for unit in schema.units:
        la, lb = unit.member_layer_ids[0], unit.member_layer_ids[-1]
        span = f"layer {la}" if la == lb else f"layers {la}-{lb} (block of {len(unit.member_layer_ids)})"
        names = graph.layer(la).name if la == lb \
            else f"{graph.layer(la).name}..{graph.layer(lb).name}"
        lines.append(f"  unit {unit.unit_id}: {span} [{names}] "
                     f"boundary_bytes={unit.boundary_output_bytes}")
    print("\n".join(lines))
    return 0


def _render_report(graph, schema: PartitionSchema, topo: Topology,
                   results: list[Configuration], objective: str, top: int) -> str:
    counts = [len(topo.resources[t]) for t in topo.tiers]
    total = count_configurations(len(schema.cut_points), counts)
    tier_summary = " ".join(
        f"{t.value}=[{','.join(topo.resources[t])}]" for t in topo.tiers)
    lines = [
        f"model={schema.model_name} layers={len(graph.layers)} "
        f"units={schema.num_units} cuts={len(schema.cut_points)} "
        f"input_bytes={schema.reference_input_bytes}",
        f"topology: {tier_summary} source={topo.source_resource}",
        f"objective={objective} top={top} configurations={total}",
        f"{'rank':>4}  {'end_to_end_s':>12}  {'transfer_MB':>11}  configuration",
    ]
    for i, config in enumerate(results, start=1):
        m = config.metrics
        lines.append(f"{i:>4}  {m.end_to_end_s:>12.6f}  "
                     f"{m.total_transfer_bytes / 1e6:>11.3f}  {config.description}")
        compute = " ".join(f"{rid}={secs:.6f}s"
                           for rid, secs in m.per_resource_compute_s.items())
        lines.append(f"      compute: {compute}")
        if m.per_hop_transfer:
            hops = "; ".join(
                f"{h.from_resource}->{h.to_resource} {h.payload_bytes} B {h.seconds:.6f}s"
                for h in m.per_hop_transfer)
            lines.append(f"      hops: {hops}")
    return "\n".join(lines)


def _write_csv(outdir: Path, results: list[Configuration]) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "configurations.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rank", "description", "segments", "end_to_end_s",
                         "compute_s", "transfer_s", "total_transfer_bytes"])
        for i, config in enumerate(results, start=1):
            m = config.metrics
            compute = sum(m.per_resource_compute_s.values())
            transfer = sum(h.seconds for h in m.per_hop_transfer)
            writer.writerow([i, config.description, len(config.segments),
                             m.end_to_end_s, compute, transfer,
                             m.total_transfer_bytes])
    with open(outdir / "segments.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rank", "seq", "resource", "tier", "unit_start", "unit_end",
                         "layer_start", "layer_end", "compute_s"])
        for i, config in enumerate(results, start=1):
            for j, seg in enumerate(config.segments):
                writer.writerow([i, j, seg.resource_id, seg.tier.value,
                                 seg.unit_start, seg.unit_end,
                                 seg.layer_start, seg.layer_end,
                                 config.metrics.per_resource_compute_s[seg.resource_id]])
    with open(outdir / "hops.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rank", "seq", "from", "to", "from_tier", "to_tier",
                         "payload_bytes", "seconds"])
        for i, config in enumerate(results, start=1):
            for j, hop in enumerate(config.metrics.per_hop_transfer):
                writer.writerow([i, j, hop.from_resource, hop.to_resource,
                                 hop.from_tier.value, hop.to_tier.value,
                                 hop.payload_bytes, hop.seconds])


if __name__ == "__main__":
    sys.exit(main())
