#!/usr/bin/env python3
"""Measure query answering latency on an instance directory.

Times query parse + solve + report rendering (file parsing excluded),
printing median/p90/max over the requested number of runs.

    python scripts/bench_query_latency.py --dir demo \
        --query "use(device); use(edge); use(cloud)" --runs 20
"""

import argparse
import statistics
import time
from pathlib import Path

from scission.cli import _render_report
from scission.graph import find_cut_points, load_graph
from scission.network import load_topology, validate_for_planning
from scission.profiles import check_alignment, load_profile
from scission.query import parse_query, solve


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--dir", required=True,
                        help="directory with model.graph.json, topology.json, *.profile.json")
    parser.add_argument("--query", default="minimize latency")
    parser.add_argument("--runs", type=int, default=20)
    args = parser.parse_args()

    root = Path(args.dir)
    graph = load_graph(root / "model.graph.json")
    schema = find_cut_points(graph)
    topo = load_topology(root / "topology.json")
    validate_for_planning(topo)
    profiles = {}
    for path in sorted(root.glob("*.profile.json")):
        prof = load_profile(path)
        check_alignment(prof, schema)
        profiles[prof.resource_id] = prof

    timings = []
    report = ""
    for _ in range(args.runs):
        t0 = time.perf_counter()
        query = parse_query(args.query, topo)
        results = solve(query, schema, profiles, topo)
        report = _render_report(graph, schema, topo, results, query.objective, query.n)
        timings.append(time.perf_counter() - t0)

    timings.sort()
    p90 = timings[min(len(timings) - 1, int(0.9 * len(timings)))]
    print(report)
    print()
    print(f"runs={args.runs} median={statistics.median(timings) * 1000:.2f}ms "
          f"p90={p90 * 1000:.2f}ms max={timings[-1] * 1000:.2f}ms")


if __name__ == "__main__":
    main()
