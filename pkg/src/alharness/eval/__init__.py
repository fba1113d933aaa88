from .metrics import (
    EvalReport,
    MatchEntry,
    MatchResult,
    average_precision,
    evaluate_run,
    iou,
    match_detections,
    pool_matches,
)

__all__ = [
    "EvalReport",
    "MatchEntry",
    "MatchResult",
    "average_precision",
    "evaluate_run",
    "iou",
    "match_detections",
    "pool_matches",
]
