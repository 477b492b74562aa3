"""Complex-contagion simulation toolkit.

Vector-valued propagations spreading on preferential-attachment networks
with spectral node features, plus baselines, analytics, an experiment
harness, a cascade-trace learner, and a propagation-vector optimizer.
"""

__version__ = "0.1.0"

from .netgen import (
    FeatureMatrix,
    RawGraph,
    WeightedGraph,
    assign_edge_weights,
    build_graph,
    diameter,
    generate_pa,
    load_graph,
    save_graph,
    segment_nodes,
    spectral_embed,
)
from .updyn import (
    CascadeRecord,
    CascadeState,
    Propagation,
    SimParams,
    activation_prob,
    affinity,
    drift_update,
    global_influence,
    local_influence,
    run_cascade,
    self_propagation,
    step,
    step_probs_matrix,
)

__all__ = [
    "__version__",
    "FeatureMatrix",
    "RawGraph",
    "WeightedGraph",
    "assign_edge_weights",
    "build_graph",
    "diameter",
    "generate_pa",
    "load_graph",
    "save_graph",
    "segment_nodes",
    "spectral_embed",
    "CascadeRecord",
    "CascadeState",
    "Propagation",
    "SimParams",
    "activation_prob",
    "affinity",
    "drift_update",
    "global_influence",
    "local_influence",
    "run_cascade",
    "self_propagation",
    "step",
    "step_probs_matrix",
]
