"""Context-aware partition planner for DNN inference across device, edge and cloud."""

from .errors import (
    GraphError, ProfileError, QueryError, ScissionError, SearchError, TopologyError,
)
from .graph import (
    DnnGraph, ExecutionUnit, Layer, LayerKind, PartitionSchema,
    find_cut_points, load_graph, parse_graph, topological_order,
)
from .network import (
    Link, Tier, Topology, load_topology, parse_topology, preset,
    transfer_time, validate_for_planning,
)
from .profiles import (
    ResourceProfile, aggregate_runs, check_alignment, ingest_profile,
    load_profile, native_time,
)
from .query import Query, parse_query, satisfies, solve
from .search import (
    ConfigMetrics, Configuration, Hop, Segment, count_configurations,
    enumerate_configurations, evaluate, parse_configuration, rank,
    top_configurations,
)

__version__ = "0.1.0"
