"""rankindex: direct rank access, conformal sets, and stripe range retrieval
over linear scoring functions."""

from .core import (
    Dataset,
    Point,
    RankedAnswer,
    ScoringVector,
    StripeRange,
    normalize,
    rank_of,
    score,
    select_kth_by_score,
    select_rank_exhaustive,
)
from .dar import (
    ConformalSet,
    DarPipelineConfig,
    build_pipeline,
    choose_epsilon,
    conformal_query,
    exact_query,
    halfspace_count_via_dar,
)
from .epsample import (
    EpsSample,
    ThresholdPair,
    build_eps_sample,
    sample_size,
    stripe_from_sample,
    thresholds,
    verify_eps_sample,
)
from .errors import DataError, UsageError
from .hier import (
    Ball,
    HierIndex,
    ball_intersects_stripe,
    build_hier,
    hier_query_stripe,
    smallest_enclosing_ball,
)
from .kthlevel2d import LevelStructure2D, build_levels_2d, query_kth_2d
from .srr import (
    ExhaustiveBackend,
    KdTreeIndex,
    ScanStats,
    count_halfspace,
    exhaustive_query_stripe,
    kdtree_build,
    kdtree_query_stripe,
)

__version__ = "0.1.0"

__all__ = [
    "Ball",
    "ConformalSet",
    "DarPipelineConfig",
    "DataError",
    "Dataset",
    "EpsSample",
    "ExhaustiveBackend",
    "HierIndex",
    "KdTreeIndex",
    "LevelStructure2D",
    "Point",
    "RankedAnswer",
    "ScanStats",
    "ScoringVector",
    "StripeRange",
    "ThresholdPair",
    "UsageError",
    "ball_intersects_stripe",
    "build_eps_sample",
    "build_hier",
    "build_levels_2d",
    "build_pipeline",
    "choose_epsilon",
    "conformal_query",
    "count_halfspace",
    "exact_query",
    "exhaustive_query_stripe",
    "halfspace_count_via_dar",
    "hier_query_stripe",
    "kdtree_build",
    "kdtree_query_stripe",
    "normalize",
    "query_kth_2d",
    "rank_of",
    "sample_size",
    "score",
    "select_kth_by_score",
    "select_rank_exhaustive",
    "smallest_enclosing_ball",
    "stripe_from_sample",
    "thresholds",
    "verify_eps_sample",
]
