from .builtin import BUILTIN_STRATEGIES, StrategyInputs, score_candidates
from .scoring import (
    AggregationPolicy,
    ScoredSample,
    consistency_score,
    entropy_image_score,
    entropy_of,
    hflip_transform,
    random_scores,
    select_top_k,
)

__all__ = [
    "AggregationPolicy",
    "BUILTIN_STRATEGIES",
    "ScoredSample",
    "StrategyInputs",
    "consistency_score",
    "entropy_image_score",
    "entropy_of",
    "hflip_transform",
    "random_scores",
    "score_candidates",
    "select_top_k",
]
