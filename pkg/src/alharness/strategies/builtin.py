"""Built-in strategies as one dispatch table.

The same ``score_candidates`` call backs both in-process scoring and the
built-in strategy plugin, which is what makes the two paths comparable.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from ..core.types import Detection
from .scoring import (
    AggregationPolicy,
    ScoredSample,
    consistency_score,
    entropy_image_score,
    hflip_transform,
    random_scores,
)


@dataclass
class StrategyInputs:
    candidate_ids: Sequence[str]
    seed: int = 0
    iteration: int = 0
    detections: Mapping[str, Sequence[Detection]] = field(default_factory=dict)
    hflip_detections: Mapping[str, Sequence[Detection]] = field(default_factory=dict)
    image_widths: Mapping[str, float] = field(default_factory=dict)


def _random(inputs: StrategyInputs, params: Mapping) -> list[ScoredSample]:
    return random_scores(list(inputs.candidate_ids), inputs.seed, inputs.iteration)


def _entropy(inputs: StrategyInputs, params: Mapping) -> list[ScoredSample]:
    policy = AggregationPolicy(params.get("kind", "max"), float(params.get("confidence_threshold", 0.1)))
    return [
        ScoredSample(sid, entropy_image_score(inputs.detections.get(sid, ()), policy))
        for sid in inputs.candidate_ids
    ]


def _consistency(inputs: StrategyInputs, params: Mapping) -> list[ScoredSample]:
    out = []
    for sid in inputs.candidate_ids:
        transform = hflip_transform(inputs.image_widths[sid])
        out.append(ScoredSample(
            sid,
            consistency_score(inputs.detections.get(sid, ()), inputs.hflip_detections.get(sid, ()), transform),
        ))
    return out


# name -> (scorer, in_dir artifacts it reads)
BUILTIN_STRATEGIES: dict[str, tuple[Callable[[StrategyInputs, Mapping], list[ScoredSample]], tuple[str, ...]]] = {
    "random": (_random, ()),
    "entropy": (_entropy, ("detections",)),
    "consistency": (_consistency, ("detections", "hflip_detections")),
}


def score_candidates(name: str, inputs: StrategyInputs, params: Mapping | None = None) -> list[ScoredSample]:
    try:
        scorer, _ = BUILTIN_STRATEGIES[name]
    except KeyError:
        raise ValueError(f"unknown built-in strategy {name!r}") from None
    return scorer(inputs, params or {})
