"""Spectra of metric graphs, Dirichlet-to-Neumann maps of vertex decorations and resonant gap opening."""
from .graph import (
    AttachmentMap,
    Condition,
    Decoration,
    GraphError,
    MetricEdge,
    MetricGraph,
    PeriodicMetricGraph,
    check_spider_conditions,
    decorate,
    decorate_periodic,
    dirichlet_edge_spectrum,
    make_graph,
    make_spider,
    validate,
)
from .secular import build_bloch_secular, build_secular, solution_from_nullvector
from .eigensolve import ScanOptions, SpectrumResult, bloch_spectrum, eigenvalue_count, scan_spectrum, weyl_check

__version__ = "0.1.0"
