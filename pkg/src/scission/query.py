"""Constraint query parsing, checking and solving.

Grammar::

    query  := clause (";" clause)*
    clause := "minimize" ("latency" | "transfer") | "topn" INT | atom
    atom   := "use(" RES ")" | "exclude(" RES ")" | "native(" RES ")"
            | "place(" INT "," RES ")"
            | "time(" RES ")" CMP DUR
            | "time_frac(" RES ")" CMP FLOAT
            | "transfer(" RES "->" RES ")" CMP SIZE
            | "total_transfer" CMP SIZE
    CMP    := "<=" | ">="
    DUR    := FLOAT ("s" | "ms")
    SIZE   := FLOAT ("B" | "KB" | "MB")          (decimal multipliers)
    RES    := resource id or tier name

Constraints are conjunctive.  A tier name stands for "some resource of that
tier".  ``place()`` takes a raw layer id and pins the whole execution unit
containing it (a layer inside a block cannot be placed separately).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

from .errors import GraphError, QueryError
from .graph import PartitionSchema
from .network import TIER_NAMES, Tier, Topology
from .profiles import ResourceProfile
from .search import Configuration, Pipeline, top_configurations

_SIZE_MULTIPLIERS = {"B": 1.0, "KB": 1e3, "MB": 1e6}
_DURATION_MULTIPLIERS = {"s": 1.0, "ms": 1e-3}


@dataclass(frozen=True)
class ResourceRef:
    """A resource id, or a tier name quantifying over that tier's resources."""

    name: str
    is_tier: bool

    def matches(self, resource_id: str, tier: Tier) -> bool:
        return tier.value == self.name if self.is_tier else resource_id == self.name

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class UseResource:
    ref: ResourceRef


@dataclass(frozen=True)
class ExcludeResource:
    ref: ResourceRef


@dataclass(frozen=True)
class NativeOn:
    ref: ResourceRef


@dataclass(frozen=True)
class PlaceLayer:
    layer_id: int
    ref: ResourceRef


@dataclass(frozen=True)
class ComputeTimeBound:
    ref: ResourceRef
    cmp: str
    seconds: float


@dataclass(frozen=True)
class ComputeTimeFraction:
    ref: ResourceRef
    cmp: str
    fraction: float


@dataclass(frozen=True)
class HopTransferBound:
    from_ref: ResourceRef
    to_ref: ResourceRef
    cmp: str
    bound_bytes: float


@dataclass(frozen=True)
class TotalTransferBound:
    cmp: str
    bound_bytes: float


Constraint = Union[
    UseResource, ExcludeResource, NativeOn, PlaceLayer,
    ComputeTimeBound, ComputeTimeFraction, HopTransferBound, TotalTransferBound,
]


@dataclass
class Query:
    objective: str = "latency"
    n: int = 3
    constraints: tuple[Constraint, ...] = ()


def _cmp(value, op: str, bound) -> bool:
    return value <= bound if op == "<=" else value >= bound


_TOKEN_RE = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<number>\d+(?:\.\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<arrow>->)"
    r"|(?P<cmp><=|>=)"
    r"|(?P<punct>[();,])"
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise QueryError(f"unexpected character {text[pos]!r}", pos)
        if m.lastgroup != "ws":
            tokens.append(_Token(m.lastgroup, m.group(), pos))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token], length: int):
        self.tokens = tokens
        self.i = 0
        self.length = length

    def peek(self) -> _Token | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def next(self, expected: str) -> _Token:
        tok = self.peek()
        if tok is None:
            raise QueryError(f"expected {expected}, got end of query", self.length)
        self.i += 1
        return tok

    def expect_text(self, text: str) -> _Token:
        tok = self.next(f"'{text}'")
        if tok.text != text:
            raise QueryError(f"expected '{text}', got '{tok.text}'", tok.pos)
        return tok

    def expect_kind(self, kind: str, expected: str) -> _Token:
        tok = self.next(expected)
        if tok.kind != kind:
            raise QueryError(f"expected {expected}, got '{tok.text}'", tok.pos)
        return tok


def parse_query(text: str, topology: Topology | None = None,
                default_objective: str = "latency", default_n: int = 3) -> Query:
    """Parse a query string into a deterministic AST.

    When a topology is given, resource references are resolved against it and
    unknown names are rejected.  ``use(x)`` together with ``exclude(x)`` is
    rejected at parse time.
    """
    parser = _Parser(_tokenize(text), len(text))
    objective = default_objective
    n = default_n
    constraints: list[Constraint] = []
    used: set[ResourceRef] = set()
    excluded: set[ResourceRef] = set()

    first = True
    while parser.peek() is not None:
        if not first:
            parser.expect_text(";")
            if parser.peek() is None:  # tolerate a trailing separator
                break
        first = False
        tok = parser.expect_kind("ident", "a clause keyword")
        if tok.text == "minimize":
            obj = parser.expect_kind("ident", "'latency' or 'transfer'")
            if obj.text not in ("latency", "transfer"):
                raise QueryError(f"expected 'latency' or 'transfer', got '{obj.text}'", obj.pos)
            objective = obj.text
        elif tok.text == "topn":
            num = parser.expect_kind("number", "an integer")
            if "." in num.text or int(num.text) < 1:
                raise QueryError(f"topn needs a positive integer, got '{num.text}'", num.pos)
            n = int(num.text)
        else:
            constraints.append(_parse_atom(parser, tok, topology))
            last = constraints[-1]
            if isinstance(last, UseResource):
                used.add(last.ref)
            elif isinstance(last, ExcludeResource):
                excluded.add(last.ref)

    for ref in sorted(used & excluded, key=lambda r: r.name):
        raise QueryError(f"contradictory constraints: use({ref}) and exclude({ref})")
    return Query(objective, n, tuple(constraints))


def _parse_atom(parser: _Parser, tok: _Token, topology: Topology | None) -> Constraint:
    name = tok.text
    if name in ("use", "exclude", "native"):
        parser.expect_text("(")
        ref = _parse_res(parser, topology)
        parser.expect_text(")")
        cls = {"use": UseResource, "exclude": ExcludeResource, "native": NativeOn}[name]
        return cls(ref)
    if name == "place":
        parser.expect_text("(")
        num = parser.expect_kind("number", "a layer id")
        if "." in num.text:
            raise QueryError(f"layer id must be an integer, got '{num.text}'", num.pos)
        parser.expect_text(",")
        ref = _parse_res(parser, topology)
        parser.expect_text(")")
        return PlaceLayer(int(num.text), ref)
    if name == "time":
        parser.expect_text("(")
        ref = _parse_res(parser, topology)
        parser.expect_text(")")
        op = parser.expect_kind("cmp", "'<=' or '>='").text
        seconds = _parse_quantity(parser, _DURATION_MULTIPLIERS, "a duration unit (s or ms)")
        return ComputeTimeBound(ref, op, seconds)
    if name == "time_frac":
        parser.expect_text("(")
        ref = _parse_res(parser, topology)
        parser.expect_text(")")
        op = parser.expect_kind("cmp", "'<=' or '>='").text
        num = parser.expect_kind("number", "a fraction")
        frac = float(num.text)
        if not 0.0 <= frac <= 1.0:
            raise QueryError(f"fraction must be within [0,1], got {num.text}", num.pos)
        return ComputeTimeFraction(ref, op, frac)
    if name == "transfer":
        parser.expect_text("(")
        from_ref = _parse_res(parser, topology)
        parser.expect_kind("arrow", "'->'")
        to_ref = _parse_res(parser, topology)
        parser.expect_text(")")
        op = parser.expect_kind("cmp", "'<=' or '>='").text
        bound = _parse_quantity(parser, _SIZE_MULTIPLIERS, "a size unit (B, KB or MB)")
        return HopTransferBound(from_ref, to_ref, op, bound)
    if name == "total_transfer":
        op = parser.expect_kind("cmp", "'<=' or '>='").text
        bound = _parse_quantity(parser, _SIZE_MULTIPLIERS, "a size unit (B, KB or MB)")
        return TotalTransferBound(op, bound)
    raise QueryError(f"unknown clause '{name}'", tok.pos)


def _parse_quantity(parser: _Parser, multipliers: dict[str, float], expected: str) -> float:
    num = parser.expect_kind("number", "a number")
    unit = parser.expect_kind("ident", expected)
    if unit.text not in multipliers:
        raise QueryError(f"expected {expected}, got '{unit.text}'", unit.pos)
    return float(num.text) * multipliers[unit.text]


def _parse_res(parser: _Parser, topology: Topology | None) -> ResourceRef:
    tok = parser.expect_kind("ident", "a resource id or tier name")
    if tok.text in TIER_NAMES:
        return ResourceRef(tok.text, is_tier=True)
    if topology is not None and tok.text not in topology.all_resources():
        raise QueryError(f"unknown resource or tier '{tok.text}'", tok.pos)
    return ResourceRef(tok.text, is_tier=False)


def satisfies(config: Configuration, query: Query, schema: PartitionSchema) -> bool:
    """True iff an evaluated configuration meets every constraint."""
    m = config.metrics
    if m is None:
        raise QueryError("configuration has no metrics")
    for con in query.constraints:
        if not _holds(con, config, schema):
            return False
    return True


def _holds(con: Constraint, config: Configuration, schema: PartitionSchema) -> bool:
    segments = config.segments
    m = config.metrics
    if isinstance(con, UseResource):
        return any(con.ref.matches(s.resource_id, s.tier) for s in segments)
    if isinstance(con, ExcludeResource):
        return not any(con.ref.matches(s.resource_id, s.tier) for s in segments)
    if isinstance(con, NativeOn):
        return len(segments) == 1 and con.ref.matches(segments[0].resource_id, segments[0].tier)
    if isinstance(con, PlaceLayer):
        uid = _unit_of(schema, con.layer_id)
        for seg in segments:
            if seg.unit_start <= uid <= seg.unit_end:
                return con.ref.matches(seg.resource_id, seg.tier)
        return False
    if isinstance(con, ComputeTimeBound):
        t = sum(m.per_resource_compute_s[s.resource_id]
                for s in segments if con.ref.matches(s.resource_id, s.tier))
        return _cmp(t, con.cmp, con.seconds)
    if isinstance(con, ComputeTimeFraction):
        t = sum(m.per_resource_compute_s[s.resource_id]
                for s in segments if con.ref.matches(s.resource_id, s.tier))
        denom = sum(m.per_resource_compute_s.values())
        frac = 0.0 if denom == 0.0 else t / denom
        return _cmp(frac, con.cmp, con.fraction)
    if isinstance(con, HopTransferBound):
        total = sum(h.payload_bytes for h in m.per_hop_transfer
                    if con.from_ref.matches(h.from_resource, h.from_tier)
                    and con.to_ref.matches(h.to_resource, h.to_tier))
        return _cmp(total, con.cmp, con.bound_bytes)
    if isinstance(con, TotalTransferBound):
        return _cmp(m.total_transfer_bytes, con.cmp, con.bound_bytes)
    raise QueryError(f"unsupported constraint {con!r}")


def _unit_of(schema: PartitionSchema, layer_id: int) -> int:
    try:
        return schema.unit_of_layer(layer_id)
    except GraphError as exc:
        raise QueryError(str(exc)) from exc


class CompiledQuery:
    """Constraints compiled against one instance for the fused search path.

    Pipeline-level constraints (use/exclude/native, and any bound that
    resolves to a constant on a given pipeline) prune whole pipelines;
    the rest become cheap per-configuration checks over cut positions,
    per-segment compute and transfer bytes.  Semantics match ``satisfies``.
    """

    def __init__(self, query: Query, schema: PartitionSchema, topo: Topology):
        self.query = query
        self.schema = schema
        self.topo = topo
        self.num_units = schema.num_units
        self.bytes_after = [u.boundary_output_bytes for u in schema.units]
        self.source = topo.source_resource
        self.source_tier = topo.tier_of(self.source)
        # (layer, unit, layer span) of each place() pin, for user reporting
        self.place_resolutions: list[tuple[int, int, tuple[int, int]]] = []
        for con in query.constraints:
            if isinstance(con, PlaceLayer):
                uid = _unit_of(schema, con.layer_id)
                span = schema.layer_span(uid, uid)
                self.place_resolutions.append((con.layer_id, uid, span))

    def for_pipeline(self, pipe: Pipeline):
        """False to prune the pipeline, True when every configuration of it
        passes, else a checker(cuts, computes, total_bytes) callable."""
        k = len(pipe)
        checks = []
        for con in self.query.constraints:
            if isinstance(con, UseResource):
                if not any(con.ref.matches(r, t) for r, t in pipe):
                    return False
            elif isinstance(con, ExcludeResource):
                if any(con.ref.matches(r, t) for r, t in pipe):
                    return False
            elif isinstance(con, NativeOn):
                if k != 1 or not con.ref.matches(pipe[0][0], pipe[0][1]):
                    return False
            elif isinstance(con, PlaceLayer):
                check = self._compile_place(con, pipe)
                if check is False:
                    return False
                if check is not True:
                    checks.append(check)
            elif isinstance(con, ComputeTimeBound):
                idx = self._segment_index(con.ref, pipe)
                if idx is None:
                    if not _cmp(0.0, con.cmp, con.seconds):
                        return False
                else:
                    checks.append(self._compile_time(con, idx))
            elif isinstance(con, ComputeTimeFraction):
                idx = self._segment_index(con.ref, pipe)
                if idx is None:
                    if not _cmp(0.0, con.cmp, con.fraction):
                        return False
                else:
                    checks.append(self._compile_fraction(con, idx))
            elif isinstance(con, HopTransferBound):
                checks.append(self._compile_hop(con, pipe))
            elif isinstance(con, TotalTransferBound):
                checks.append(self._compile_total(con))
            else:
                raise QueryError(f"unsupported constraint {con!r}")
        if not checks:
            return True

        def checker(cuts, computes, total_bytes):
            for check in checks:
                if not check(cuts, computes, total_bytes):
                    return False
            return True

        return checker

    @staticmethod
    def _segment_index(ref: ResourceRef, pipe: Pipeline) -> int | None:
        for i, (rid, tier) in enumerate(pipe):
            if ref.matches(rid, tier):
                return i
        return None

    def _compile_place(self, con: PlaceLayer, pipe: Pipeline):
        uid = _unit_of(self.schema, con.layer_id)
        idx = self._segment_index(con.ref, pipe)
        if idx is None:
            return False
        k = len(pipe)
        U = self.num_units
        if k == 1:
            return True  # the single segment holds every unit

        def check(cuts, computes, total_bytes,
                  idx=idx, uid=uid, k=k, U=U):
            lo = 0 if idx == 0 else cuts[idx - 1] + 1
            hi = cuts[idx] if idx < k - 1 else U - 1
            return lo <= uid <= hi

        return check

    @staticmethod
    def _compile_time(con: ComputeTimeBound, idx: int):
        def check(cuts, computes, total_bytes, idx=idx, con=con):
            return _cmp(computes[idx], con.cmp, con.seconds)
        return check

    @staticmethod
    def _compile_fraction(con: ComputeTimeFraction, idx: int):
        def check(cuts, computes, total_bytes, idx=idx, con=con):
            denom = sum(computes)
            frac = 0.0 if denom == 0.0 else computes[idx] / denom
            return _cmp(frac, con.cmp, con.fraction)
        return check

    def _compile_hop(self, con: HopTransferBound, pipe: Pipeline):
        constant = 0
        slots: list[int] = []
        first_rid, first_tier = pipe[0]
        if first_rid != self.source \
                and con.from_ref.matches(self.source, self.source_tier) \
                and con.to_ref.matches(first_rid, first_tier):
            constant = self.schema.reference_input_bytes
        for i in range(len(pipe) - 1):
            if con.from_ref.matches(*pipe[i]) and con.to_ref.matches(*pipe[i + 1]):
                slots.append(i)
        bytes_after = self.bytes_after

        def check(cuts, computes, total_bytes,
                  constant=constant, slots=slots, con=con):
            total = constant
            for i in slots:
                total += bytes_after[cuts[i]]
            return _cmp(total, con.cmp, con.bound_bytes)

        return check

    @staticmethod
    def _compile_total(con: TotalTransferBound):
        def check(cuts, computes, total_bytes, con=con):
            return _cmp(total_bytes, con.cmp, con.bound_bytes)
        return check


def solve(query: Query, schema: PartitionSchema,
          profiles: dict[str, ResourceProfile], topo: Topology,
          threads: int = 0, n: int | None = None) -> list[Configuration]:
    """Top-N configurations satisfying the query, ranked by its objective.

    ``n`` overrides the query's own top-N when given (None keeps the
    query's value; pass ``n=0`` for the full ranking).
    """
    limit: int | None = query.n if n is None else (None if n == 0 else n)
    compiled = CompiledQuery(query, schema, topo)
    return top_configurations(schema, topo, profiles, objective=query.objective,
                              n=limit, predicate=compiled, threads=threads)
