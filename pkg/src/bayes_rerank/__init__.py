"""Posterior re-ranking of multimodal retrieval candidates.

Per-modality similarity scores are fused into a query likelihood with
Dempster-Shafer belief functions, weighted by a layout or knowledge-graph
consistency prior, and evidence tuples are ranked by the product.
"""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    Candidate,
    FusionConfig,
    MassFunction,
    Modality,
    NormalizationStats,
    compute_stats,
    load_config,
    normalize_score,
)
from .fusion import (  # noqa: E402
    ExtremeConflict,
    LikelihoodResult,
    bpa_from_score,
    combine_dempster,
    likelihood_ds,
    likelihood_linear,
    pignistic,
)
from .priors import (  # noqa: E402
    GraphEdgeStore,
    LayoutRecord,
    PriorMode,
    aggregate_relation_weights,
    edge_probability,
    graph_prior,
    layout_prior,
    prior_of_tuple,
)
from .ranker import (  # noqa: E402
    CandidatePool,
    EvidenceTuple,
    FusionMethod,
    Scorer,
    brute_force_rank,
    enumerate_tuples,
    rank_baseline_raw,
    rank_top_k,
    score_tuple,
)
