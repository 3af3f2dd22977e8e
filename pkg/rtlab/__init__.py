"""Ramsey-Turan K4 toolkit."""
from .const import TOOL_VERSION
from .core import BipartitePair, Graph, RtlabError, VertexSet
from .pipeline import ClaimMode, PipelineConfig, edge_bound, run_pipeline

__version__ = TOOL_VERSION

__all__ = [
    "BipartitePair",
    "ClaimMode",
    "Graph",
    "PipelineConfig",
    "RtlabError",
    "VertexSet",
    "__version__",
    "edge_bound",
    "run_pipeline",
]
