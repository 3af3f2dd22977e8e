"""Core graph module for rtlab."""
from .exceptions import (
    ClaimFailedError,
    EnumerationLimitError,
    ExtractionError,
    GraphFormatError,
    InvalidParameterError,
    K4PresentError,
    NoCoreError,
    PreconditionError,
    ReportSchemaError,
    RtlabError,
    WitnessSearchError,
)
from .graph_io import parse_graph, read_graph, write_graph
from .models import (
    BipartitePair,
    Graph,
    VertexSet,
    as_fraction,
    bipartite_density,
    bipartite_density_approx,
    count_edges_between,
    degree_into,
    edge_count,
    format_fraction,
    induced_subgraph,
)

__all__ = [
    "BipartitePair",
    "ClaimFailedError",
    "EnumerationLimitError",
    "ExtractionError",
    "Graph",
    "GraphFormatError",
    "InvalidParameterError",
    "K4PresentError",
    "NoCoreError",
    "PreconditionError",
    "ReportSchemaError",
    "RtlabError",
    "VertexSet",
    "WitnessSearchError",
    "as_fraction",
    "bipartite_density",
    "bipartite_density_approx",
    "count_edges_between",
    "degree_into",
    "edge_count",
    "format_fraction",
    "induced_subgraph",
    "parse_graph",
    "read_graph",
    "write_graph",
]
