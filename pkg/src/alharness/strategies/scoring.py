"""Acquisition scores and top-K selection."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

from ..core.types import PROB_TOL, BoundingBox, Detection
from ..errors import BudgetError, DuplicateSampleError, NormalizationError
from ..eval.metrics import iou
from ..rng import keyed_generator

AGGREGATIONS = ("max", "mean", "sum")


@dataclass(frozen=True)
class ScoredSample:
    sample_id: str
    score: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.score):
            raise ValueError(f"score for {self.sample_id!r} is not finite: {self.score}")


@dataclass(frozen=True)
class AggregationPolicy:
    kind: str = "max"
    confidence_threshold: float = 0.1

    def __post_init__(self) -> None:
        if self.kind not in AGGREGATIONS:
            raise ValueError(f"aggregation kind must be one of {AGGREGATIONS}, got {self.kind!r}")
        if not 0.0 <= self.confidence_threshold <= 1.0:
            raise ValueError("confidence_threshold must lie in [0, 1]")


def entropy_of(dist: Sequence[float], tol: float = PROB_TOL) -> float:
    """Shannon entropy in nats, with 0 * ln 0 = 0."""
    if any(p < 0 or not math.isfinite(p) for p in dist):
        raise NormalizationError(f"negative or non-finite probability in {tuple(dist)}")
    if abs(math.fsum(dist) - 1.0) > tol:
        raise NormalizationError(f"distribution sums to {math.fsum(dist)}")
    return -math.fsum(p * math.log(p) for p in dist if p > 0)


def entropy_image_score(dets: Sequence[Detection], policy: AggregationPolicy = AggregationPolicy()) -> float:
    values = [entropy_of(d.class_probs) for d in dets if d.confidence >= policy.confidence_threshold]
    if not values:
        return 0.0
    if policy.kind == "max":
        return max(values)
    if policy.kind == "sum":
        return math.fsum(values)
    return math.fsum(values) / len(values)


def random_score(sample_id: str, seed: int, iteration: int = 0) -> float:
    return float(keyed_generator("random-strategy", seed, iteration, sample_id).random())


def random_scores(ids: Sequence[str], seed: int, iteration: int = 0) -> list[ScoredSample]:
    """Uniform ``[0, 1)`` scores keyed per id, so an id's score ignores its neighbours."""
    if len(set(ids)) != len(ids):
        raise DuplicateSampleError("random_scores needs unique ids")
    return [ScoredSample(sid, random_score(sid, seed, iteration)) for sid in ids]


def hflip_transform(image_width: float) -> Callable[[BoundingBox], BoundingBox]:
    return lambda box: box.hflip(image_width)


def consistency_score(
    original: Sequence[Detection],
    augmented: Sequence[Detection],
    transform: Callable[[BoundingBox], BoundingBox],
) -> float:
    """1 minus the worst per-box agreement between two views of an image.

    A box's agreement is IoU(T(b), b') * (1 - L1(p, p') / 2), where b' is the
    augmented detection overlapping T(b) most (first one on ties).  Boxes with
    no overlapping partner score 0.  No original detections gives 0.
    """
    if not original:
        return 0.0
    worst = 1.0
    for det in original:
        mapped = transform(det.box)
        best_iou, partner = 0.0, None
        for aug in augmented:
            v = iou(mapped, aug.box)
            if v > best_iou:
                best_iou, partner = v, aug
        if partner is None:
            return 1.0
        l1 = math.fsum(abs(p - q) for p, q in zip(det.class_probs, partner.class_probs))
        s = best_iou * (1.0 - 0.5 * l1)
        worst = min(worst, s)
    return min(1.0, max(0.0, 1.0 - worst))


def select_top_k(scores: Sequence[ScoredSample], k: int) -> list[str]:
    """Highest scores first; equal scores go by ascending sample_id."""
    if k < 0:
        raise BudgetError(f"k must be non-negative, got {k}")
    ids = [s.sample_id for s in scores]
    if len(set(ids)) != len(ids):
        raise DuplicateSampleError("scores contain duplicate sample ids")
    ranked = sorted(scores, key=lambda s: (-s.score, s.sample_id))
    return [s.sample_id for s in ranked[:k]]
