"""Per-resource benchmark profiles of execution units."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

from .errors import ProfileError
from .graph import PartitionSchema
from .network import Tier, parse_tier


@dataclass
class ResourceProfile:
    """Mean execution time of every unit of one model on one resource."""

    resource_id: str
    tier: Tier
    model_name: str
    runs: int
    unit_times: dict[int, float]
    raw_samples: dict[int, tuple[float, ...]] | None = None


def aggregate_runs(samples: Sequence[float]) -> float:
    """Arithmetic mean of repeated run timings."""
    if not samples:
        raise ProfileError("cannot aggregate an empty sample list")
    for s in samples:
        if s < 0:
            raise ProfileError(f"negative time {s} in samples")
    return sum(samples) / len(samples)


def ingest_profile(document: str) -> ResourceProfile:
    """Parse and validate a profile-interchange document.

    When per-run samples are present the mean is recomputed from them; the
    stated mean is advisory.
    """
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ProfileError(f"malformed profile document: {exc}") from exc
    if not isinstance(doc, dict):
        raise ProfileError("malformed profile document: top level must be an object")
    for key in ("resource_id", "tier", "model_name", "runs", "units"):
        if key not in doc:
            raise ProfileError(f"malformed profile document: missing field '{key}'")

    runs = doc["runs"]
    if not isinstance(runs, int) or isinstance(runs, bool) or runs < 1:
        raise ProfileError(f"runs must be a positive integer, got {runs!r}")
    entries = doc["units"]
    if not isinstance(entries, list) or not entries:
        raise ProfileError("units must be a non-empty array")

    unit_times: dict[int, float] = {}
    raw_samples: dict[int, tuple[float, ...]] = {}
    for entry in entries:
        if not isinstance(entry, dict) or "unit_id" not in entry:
            raise ProfileError(f"malformed unit entry: {entry!r}")
        uid = entry["unit_id"]
        if not isinstance(uid, int) or isinstance(uid, bool) or uid < 0:
            raise ProfileError(f"unit_id must be a non-negative integer, got {uid!r}")
        if uid in unit_times:
            raise ProfileError(f"duplicate unit {uid}")
        if "samples_s" in entry and entry["samples_s"] is not None:
            samples = tuple(float(s) for s in entry["samples_s"])
            mean = aggregate_runs(samples)
            raw_samples[uid] = samples
        elif "mean_s" in entry:
            mean = float(entry["mean_s"])
        else:
            raise ProfileError(f"unit {uid}: needs 'mean_s' or 'samples_s'")
        if mean < 0:
            raise ProfileError(f"unit {uid}: negative time {mean}")
        unit_times[uid] = mean

    return ResourceProfile(
        resource_id=str(doc["resource_id"]),
        tier=parse_tier(doc["tier"]),
        model_name=str(doc["model_name"]),
        runs=runs,
        unit_times=unit_times,
        raw_samples=raw_samples or None,
    )


def load_profile(path) -> ResourceProfile:
    with open(path, "r", encoding="utf-8") as fh:
        return ingest_profile(fh.read())


def check_alignment(profile: ResourceProfile, schema: PartitionSchema) -> None:
    """Verify that a profile covers the schema's units exactly once."""
    if profile.model_name != schema.model_name:
        raise ProfileError(
            f"profile '{profile.resource_id}' is for model '{profile.model_name}', "
            f"schema is for '{schema.model_name}'"
        )
    schema_units = set(range(schema.num_units))
    have = set(profile.unit_times)
    for uid in sorted(schema_units - have):
        raise ProfileError(f"profile '{profile.resource_id}': missing unit {uid}")
    for uid in sorted(have - schema_units):
        raise ProfileError(f"profile '{profile.resource_id}': unknown unit {uid} not in schema")


def native_time(profile: ResourceProfile) -> float:
    """Total single-resource inference time: the sum of all unit times."""
    total = 0.0
    for uid in sorted(profile.unit_times):
        total += profile.unit_times[uid]
    return total
