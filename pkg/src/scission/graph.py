"""DNN layer graphs and partition schema extraction.

A model is a single-source, single-sink DAG of layers.  A boundary in the
topological order is a valid partition point only when exactly one edge
(one tensor, one consumer) crosses it; everything between two consecutive
valid boundaries collapses into a block that is benchmarked and placed as
a single execution unit.  The boundary after the input layer is never a
partition point: the downstream half would start with a copy of the input
layer and nothing would have been saved.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field
from enum import Enum

from .errors import GraphError


class LayerKind(str, Enum):
    INPUT = "input"
    CONVOLUTION = "convolution"
    POOLING = "pooling"
    DENSE = "dense"
    ACTIVATION = "activation"
    NORMALIZATION = "normalization"
    MERGE = "merge"
    SOFTMAX = "softmax"
    OTHER = "other"


# exporters disagree on how to spell elementwise-merge layers
_KIND_SYNONYMS = {"add": LayerKind.MERGE, "add/merge": LayerKind.MERGE}


def parse_kind(text: str) -> LayerKind:
    try:
        return LayerKind(text)
    except ValueError:
        if text in _KIND_SYNONYMS:
            return _KIND_SYNONYMS[text]
        raise GraphError(f"unknown layer kind '{text}'") from None


@dataclass(frozen=True)
class Layer:
    id: int
    name: str
    kind: LayerKind
    output_bytes: int


@dataclass(frozen=True)
class DnnGraph:
    model_name: str
    reference_input_bytes: int
    layers: tuple[Layer, ...]
    edges: tuple[tuple[int, int], ...]

    def layer(self, layer_id: int) -> Layer:
        return self.layers[layer_id]

    def successors(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {l.id: [] for l in self.layers}
        for u, v in self.edges:
            out[u].append(v)
        return out

    def predecessors(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {l.id: [] for l in self.layers}
        for u, v in self.edges:
            out[v].append(u)
        return out


@dataclass(frozen=True)
class ExecutionUnit:
    """A single layer, or a block of layers inside a parallel region."""

    unit_id: int
    member_layer_ids: tuple[int, ...]  # contiguous run of the topological order
    boundary_output_bytes: int  # bytes crossing the boundary after this unit

    @property
    def is_block(self) -> bool:
        return len(self.member_layer_ids) > 1


@dataclass
class PartitionSchema:
    """Execution units of a model and the valid cut positions between them.

    A cut at value ``c`` splits the model after unit ``c``.  The boundary
    after unit 0 (the bare input layer) is excluded, so for a purely linear
    graph of N layers there are N - 2 cut points.
    """

    model_name: str
    reference_input_bytes: int
    units: tuple[ExecutionUnit, ...]
    cut_points: tuple[int, ...]
    _unit_by_layer: dict[int, int] = field(init=False, repr=False)

    def __post_init__(self):
        self._unit_by_layer = {
            lid: u.unit_id for u in self.units for lid in u.member_layer_ids
        }

    @property
    def num_units(self) -> int:
        return len(self.units)

    @property
    def num_layers(self) -> int:
        return len(self._unit_by_layer)

    def unit_of_layer(self, layer_id: int) -> int:
        try:
            return self._unit_by_layer[layer_id]
        except KeyError:
            raise GraphError(f"layer id {layer_id} not found in schema") from None

    def layer_span(self, unit_start: int, unit_end: int) -> tuple[int, int]:
        """First and last member layer id of a contiguous unit range."""
        return (
            self.units[unit_start].member_layer_ids[0],
            self.units[unit_end].member_layer_ids[-1],
        )


def parse_graph(document: str) -> DnnGraph:
    """Parse and validate a graph-interchange document."""
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise GraphError(f"malformed graph document: {exc}") from exc
    if not isinstance(doc, dict):
        raise GraphError("malformed graph document: top level must be an object")
    for key in ("model_name", "reference_input_bytes", "layers", "edges"):
        if key not in doc:
            raise GraphError(f"malformed graph document: missing field '{key}'")

    model_name = doc["model_name"]
    if not isinstance(model_name, str) or not model_name:
        raise GraphError("model_name must be a non-empty string")
    input_bytes = doc["reference_input_bytes"]
    if not isinstance(input_bytes, int) or isinstance(input_bytes, bool) or input_bytes < 0:
        raise GraphError("reference_input_bytes must be a non-negative integer")

    raw_layers = doc["layers"]
    if not isinstance(raw_layers, list) or len(raw_layers) < 2:
        raise GraphError("graph must contain at least 2 layers")
    layers: list[Layer] = []
    seen_ids: set[int] = set()
    for entry in raw_layers:
        if not isinstance(entry, dict):
            raise GraphError(f"malformed layer entry: {entry!r}")
        try:
            lid, name, kind_text, out_bytes = (
                entry["id"], entry["name"], entry["kind"], entry["output_bytes"],
            )
        except KeyError as exc:
            raise GraphError(f"layer entry missing field {exc}") from None
        if not isinstance(lid, int) or isinstance(lid, bool):
            raise GraphError(f"layer id must be an integer, got {lid!r}")
        if lid in seen_ids:
            raise GraphError(f"duplicate layer id {lid}")
        seen_ids.add(lid)
        if not isinstance(out_bytes, int) or isinstance(out_bytes, bool) or out_bytes < 0:
            raise GraphError(f"layer {lid}: output_bytes must be a non-negative integer")
        layers.append(Layer(lid, str(name), parse_kind(kind_text), out_bytes))

    expected = set(range(len(layers)))
    if seen_ids != expected:
        missing = min(expected - seen_ids)
        raise GraphError(f"layer ids must form the range 0..{len(layers) - 1} (missing id {missing})")
    layers.sort(key=lambda l: l.id)

    raw_edges = doc["edges"]
    if not isinstance(raw_edges, list):
        raise GraphError("edges must be an array of [from, to] pairs")
    edges: list[tuple[int, int]] = []
    seen_edges: set[tuple[int, int]] = set()
    for entry in raw_edges:
        if not (isinstance(entry, (list, tuple)) and len(entry) == 2):
            raise GraphError(f"malformed edge entry: {entry!r}")
        u, v = entry
        if not all(isinstance(x, int) and not isinstance(x, bool) for x in (u, v)):
            raise GraphError(f"malformed edge entry: {entry!r}")
        for endpoint in (u, v):
            if endpoint not in expected:
                raise GraphError(f"edge ({u},{v}) references unknown layer id {endpoint}")
        if u == v:
            raise GraphError(f"cycle detected: self-loop at layer {u}")
        if (u, v) in seen_edges:
            raise GraphError(f"duplicate edge ({u},{v})")
        seen_edges.add((u, v))
        edges.append((u, v))

    graph = DnnGraph(model_name, input_bytes, tuple(layers), tuple(edges))
    _validate_structure(graph)
    return graph


def load_graph(path) -> DnnGraph:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_graph(fh.read())


def _validate_structure(g: DnnGraph) -> None:
    inputs = [l for l in g.layers if l.kind is LayerKind.INPUT]
    if len(inputs) != 1:
        raise GraphError(
            f"exactly one input layer required, found {[l.id for l in inputs]}"
        )
    succ = g.successors()
    pred = g.predecessors()

    sources = [lid for lid, ps in pred.items() if not ps]
    sinks = [lid for lid, ss in succ.items() if not ss]
    if len(sources) != 1:
        raise GraphError(f"multiple sources: layers {sorted(sources)}" if sources
                         else "no source layer (every layer has a predecessor)")
    if len(sinks) != 1:
        raise GraphError(f"multiple sinks: layers {sorted(sinks)}" if sinks
                         else "no sink layer (every layer has a successor)")
    if sources[0] != inputs[0].id:
        raise GraphError(f"input layer {inputs[0].id} has predecessors")

    order = _kahn_order(g, succ, pred)
    if len(order) != len(g.layers):
        stuck = min(set(l.id for l in g.layers) - set(order))
        raise GraphError(f"cycle detected involving layer {stuck}")

    reachable = _reach(sources[0], succ)
    if len(reachable) != len(g.layers):
        lost = min(set(l.id for l in g.layers) - reachable)
        raise GraphError(f"unreachable layer {lost}")
    co_reachable = _reach(sinks[0], pred)
    if len(co_reachable) != len(g.layers):
        lost = min(set(l.id for l in g.layers) - co_reachable)
        raise GraphError(f"sink not reachable from layer {lost}")

    for layer in g.layers:
        if layer.output_bytes == 0 and layer.id != sinks[0]:
            raise GraphError(
                f"layer {layer.id} has output_bytes=0 but is not the terminal layer"
            )


def _reach(start: int, adjacency: dict[int, list[int]]) -> set[int]:
    seen = {start}
    stack = [start]
    while stack:
        for nxt in adjacency[stack.pop()]:
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return seen


def _kahn_order(g: DnnGraph, succ, pred) -> list[int]:
    indeg = {lid: len(ps) for lid, ps in pred.items()}
    ready = [lid for lid, d in indeg.items() if d == 0]
    heapq.heapify(ready)
    order: list[int] = []
    while ready:
        lid = heapq.heappop(ready)
        order.append(lid)
        for nxt in succ[lid]:
            indeg[nxt] -= 1
            if indeg[nxt] == 0:
                heapq.heappush(ready, nxt)
    return order


def topological_order(g: DnnGraph) -> list[int]:
    """Deterministic topological order; ties broken by ascending layer id."""
    return _kahn_order(g, g.successors(), g.predecessors())


def find_cut_points(g: DnnGraph) -> PartitionSchema:
    """Compute execution units and valid cut positions for a validated graph.

    Sweeps the topological order once.  For each boundary between prefix and
    suffix, the number of crossing edges is tracked with a difference array;
    boundaries crossed by exactly one edge are valid.  Unit 0 is always the
    bare input layer, and the boundary after it is never a cut point.
    """
    order = topological_order(g)
    pos = {lid: i for i, lid in enumerate(order)}
    n = len(order)

    # crossing[i] counts edges over the boundary after order[i];
    # crossing_bytes[i] sums the source-layer output bytes of those edges.
    cross_diff = [0] * (n + 1)
    bytes_diff = [0] * (n + 1)
    for u, v in g.edges:
        pu, pv = pos[u], pos[v]
        if pv < pu:  # cannot happen on a validated graph
            raise GraphError(f"edge ({u},{v}) is not forward in topological order")
        w = g.layer(u).output_bytes
        cross_diff[pu] += 1
        cross_diff[pv] -= 1
        bytes_diff[pu] += w
        bytes_diff[pv] -= w
    crossing = [0] * n
    crossing_bytes = [0] * n
    acc = accb = 0
    for i in range(n - 1):
        acc += cross_diff[i]
        accb += bytes_diff[i]
        crossing[i] = acc
        crossing_bytes[i] = accb

    boundaries = [i for i in range(n - 1) if crossing[i] == 1]
    if not boundaries or boundaries[0] != 0:
        boundaries.insert(0, 0)  # unit 0 is always the input layer alone

    units: list[ExecutionUnit] = []
    start = 0
    for uid, b in enumerate(boundaries):
        members = tuple(order[start:b + 1])
        if crossing[b] == 1:
            out_bytes = crossing_bytes[b]
        else:
            # only the forced input boundary; its tensor never crosses a cut
            out_bytes = g.layer(members[-1]).output_bytes
        units.append(ExecutionUnit(uid, members, out_bytes))
        start = b + 1
    final_members = tuple(order[start:])
    units.append(ExecutionUnit(len(units), final_members,
                               g.layer(final_members[-1]).output_bytes))

    cut_points = tuple(range(1, len(units) - 1))
    return PartitionSchema(g.model_name, g.reference_input_bytes,
                           tuple(units), cut_points)
