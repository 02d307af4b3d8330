"""Graph total-variation denoising over Cartesian power graphs, plus a
KNN-graph pipeline for estimating graphon probability matrices."""

__version__ = "0.1.0"

from .admm import AdmmState, PgflResult, clamp_unit, pgfl, pgfl_objective
from .errors import FileFormatError, InputError, NumericalError, PgflError
from .graph import (
    Graph,
    IncidenceOperator,
    build_graph,
    chain_graph,
    complete_graph,
    cycle_graph,
    dyad_index,
    incidence_apply,
    incidence_apply_transpose,
    power_edges,
    read_graph_file,
    star_graph,
    write_graph_file,
)
from .graphons import (
    GraphonModel,
    NetworkSample,
    builtin_graphons,
    get_graphon,
    grand_mean_estimate,
    knn_pgfl_estimate,
    mse,
    ns_estimate,
    sample_network,
    sas_lite_estimate,
    usvt_estimate,
)
from .metrics import DistanceMatrix, d1_matrix, dinf_matrix, knn_graph
from .prox import (
    DualState,
    fused_lasso_prox,
    laplacian_solve,
    reduced_newton_step,
)
from .segmentation import DyadPartition, segment_dyads

__all__ = [
    "AdmmState", "PgflResult", "clamp_unit", "pgfl", "pgfl_objective",
    "FileFormatError", "InputError", "NumericalError", "PgflError",
    "Graph", "IncidenceOperator", "build_graph", "chain_graph",
    "complete_graph", "cycle_graph", "dyad_index", "incidence_apply",
    "incidence_apply_transpose", "power_edges", "read_graph_file",
    "star_graph", "write_graph_file",
    "GraphonModel", "NetworkSample", "builtin_graphons", "get_graphon",
    "grand_mean_estimate", "knn_pgfl_estimate", "mse", "ns_estimate",
    "sample_network", "sas_lite_estimate", "usvt_estimate",
    "DistanceMatrix", "d1_matrix", "dinf_matrix", "knn_graph",
    "DualState", "fused_lasso_prox", "laplacian_solve", "reduced_newton_step",
    "DyadPartition", "segment_dyads",
]
