#!/usr/bin/env python3
"""Generate a synthetic planning instance (graph + profiles + topology).

The model is a linear chain with plausible activation sizes; resources
differ by uniform speed factors across the device/edge/cloud tiers.

    python scripts/make_demo_instance.py --out demo --layers 62 --seed 0
    scission plan --graph demo/model.graph.json --topology demo/topology.json \
        --profile demo/*.profile.json
"""

import argparse
import json
import random
from pathlib import Path

TIERS = {
    "device": [("dev", 10.0)],
    "edge": [("edge_1", 2.5), ("edge_2", 1.8)],
    "cloud": [("cloud_1", 0.6), ("cloud_2", 0.4)],
}


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--layers", type=int, default=62)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--input-bytes", type=int, default=150_000)
    parser.add_argument("--runs", type=int, default=5)
    args = parser.parse_args()
    rng = random.Random(args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    layers = []
    for i in range(args.layers):
        kind = "input" if i == 0 else (
            "softmax" if i == args.layers - 1 else
            rng.choice(["convolution", "pooling", "activation", "normalization"]))
        # activation tensors shrink (noisily) towards the classifier
        size = max(4000, int(3_000_000 * (1.0 - i / args.layers) * rng.uniform(0.2, 1.0)))
        layers.append({"id": i, "name": f"layer_{i}", "kind": kind, "output_bytes": size})
    (out / "model.graph.json").write_text(json.dumps({
        "model_name": "synthetic",
        "reference_input_bytes": args.input_bytes,
        "layers": layers,
        "edges": [[i, i + 1] for i in range(args.layers - 1)],
    }, indent=1))

    base = [rng.uniform(0.0005, 0.01) for _ in range(args.layers)]
    for tier, members in TIERS.items():
        for rid, speed in members:
            units = []
            for u, t in enumerate(base):
                samples = [t * speed * rng.uniform(0.9, 1.1) for _ in range(args.runs)]
                units.append({"unit_id": u, "samples_s": samples,
                              "mean_s": sum(samples) / len(samples)})
            (out / f"{rid}.profile.json").write_text(json.dumps({
                "resource_id": rid, "tier": tier, "model_name": "synthetic",
                "runs": args.runs, "units": units,
            }, indent=1))

    resources = {tier: [rid for rid, _ in members] for tier, members in TIERS.items()}
    all_ids = [rid for ids in resources.values() for rid in ids]
    links = [{"from": "dev", "to": rid, "preset": "wired"}
             for rid in all_ids if rid != "dev"]
    for e in resources["edge"]:
        for c in resources["cloud"]:
            links.append({"from": e, "to": c, "preset": "edge-cloud"})
    for a in resources["edge"]:
        for b in resources["edge"]:
            if a != b:
                links.append({"from": a, "to": b, "latency_ms": 2, "bandwidth_mbps": 1000})
    (out / "topology.json").write_text(json.dumps({
        "tiers": list(TIERS), "resources": resources, "source": "dev", "links": links,
    }, indent=1))
    print(f"wrote instance with {args.layers} layers and "
          f"{len(all_ids)} resources to {out}/")


if __name__ == "__main__":
    main()
