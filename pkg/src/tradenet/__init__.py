"""Trade-network communities, centralities and count regressions.

Build a weighted undirected trade network from bilateral flow records,
find communities by thresholding the communicability distance, compute
node centralities and regress epidemic counts on them with a pooled
negative binomial model and country-clustered standard errors.
"""

from .centrality import (
    CentralityTable,
    betweenness,
    centrality_table,
    community_clustering,
    eigenvector_centrality,
    onnela_clustering,
)
from .communicability import CommunicabilityResult, communicability, distance_extremes, expm_symmetric
from .community import (
    CommunityPartition,
    cohesion,
    community_graph,
    compare_partitions,
    louvain,
    modularity,
    optimize_threshold,
    partition_from_graph,
    quality,
)
from .econometrics import (
    DesignMatrix,
    NbFitResult,
    build_design,
    clustered_vcov,
    fit_negbin,
    fit_poisson,
    overdispersion_test,
    vif,
)
from .graph import GlobalIndicators, WeightedNetwork, binarize, global_indicators, strength_normalize
from .ingest import aggregate_directed, build_panel, parse_flows, spearman_in_out, symmetrize_max

__version__ = "0.1.0"
