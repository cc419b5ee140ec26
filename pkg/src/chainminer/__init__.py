"""chainminer: maximum-entropy background models over entity graphs, clique
interestingness scoring, and interactive discovery of clique chains."""

from .graph import (
    ChainPattern,
    CliquePattern,
    Graph,
    GraphError,
    build_graph,
    enumerate_maximal_cliques,
    normalized_degree,
    subgraph_density,
    vertex_set,
)
from .maxent import (
    Constraint,
    ConvergenceError,
    EdgeProbabilityModel,
    ModelError,
    build_background,
    degree_constraint,
    density_constraint,
    entropy,
    expected_degree,
    expected_density,
    fit,
    init_uniform_model,
    interestingness,
    is_update_constraint,
    kl_divergence,
    update_background,
)

__version__ = "0.1.0"
