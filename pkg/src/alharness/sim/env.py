"""Synthetic detection environment.

A pool generator plus a closed-form "detector" whose per-class skill grows
with the difficulty-weighted amount of labeled data.  Every random draw is
keyed by (run seed, iteration, sample id) through ``rng.keyed_generator``.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ..core.types import Annotation, BoundingBox, ClassCatalog, Detection, SampleRef
from ..errors import EmptyTrainingSetError, SpecError, UnknownClassError
from ..rng import keyed_generator

MODEL_FORMAT = "sim-v1"
_MAX_SKILL = math.nextafter(1.0, 0.0)


@dataclass(frozen=True)
class SimHyper:
    alpha: float = 0.05
    beta: float = 0.5
    # jitter scale as a fraction of the ground-truth box diagonal
    sigma0: float = 0.1
    gamma: float = 0.05
    lambda0: float = 1.0
    w_min: float = 0.1

    def __post_init__(self) -> None:
        for name, value in asdict(self).items():
            if not math.isfinite(value) or value < 0:
                raise SpecError(f"hyperparameter {name} must be finite and >= 0, got {value}")

    @classmethod
    def from_dict(cls, data: Mapping | None) -> "SimHyper":
        data = dict(data or {})
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise SpecError(f"unknown hyperparameters {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in data.items()})


@dataclass(frozen=True)
class SimModel:
    skills: tuple[float, ...]
    training_version: str
    hyper: SimHyper = field(default_factory=SimHyper)

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "training_version": self.training_version,
            "skills": list(self.skills),
            "hyper": asdict(self.hyper),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "SimModel":
        if data.get("format") != MODEL_FORMAT:
            raise SpecError(f"not a {MODEL_FORMAT} model")
        return cls(tuple(float(s) for s in data["skills"]), data["training_version"],
                   SimHyper.from_dict(data["hyper"]))

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"

    @property
    def model_id(self) -> str:
        return "sim-" + hashlib.sha256(self.dumps().encode()).hexdigest()[:16]


# ---------------------------------------------------------------- pool


@dataclass(frozen=True)
class DifficultyMix:
    """Distribution of sample difficulty.

    ``mixture`` draws a sample as hard with probability ``hard_fraction``
    (difficulty uniform on ``hard``) and otherwise easy (uniform on ``easy``).
    """

    kind: str = "mixture"
    value: float = 0.0
    low: float = 0.0
    high: float = 1.0
    a: float = 1.0
    b: float = 1.0
    hard_fraction: float = 0.2
    hard: tuple[float, float] = (0.7, 1.0)
    easy: tuple[float, float] = (0.0, 0.4)

    def __post_init__(self) -> None:
        def unit(x):
            return isinstance(x, (int, float)) and 0.0 <= x <= 1.0

        if self.kind == "point":
            ok = unit(self.value)
        elif self.kind == "uniform":
            ok = unit(self.low) and unit(self.high) and self.low <= self.high
        elif self.kind == "beta":
            ok = self.a > 0 and self.b > 0
        elif self.kind == "mixture":
            ok = (unit(self.hard_fraction)
                  and all(unit(x) for x in (*self.hard, *self.easy))
                  and self.hard[0] <= self.hard[1] and self.easy[0] <= self.easy[1])
        else:
            raise SpecError(f"unknown difficulty_mix kind {self.kind!r}")
        if not ok:
            raise SpecError(f"invalid difficulty_mix {self}")

    @classmethod
    def from_dict(cls, data: Mapping | None) -> "DifficultyMix":
        data = dict(data or {})
        for key in ("hard", "easy"):
            if key in data:
                data[key] = tuple(data[key])
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise SpecError(f"unknown difficulty_mix fields {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise SpecError(str(exc)) from None

    def to_dict(self) -> dict:
        if self.kind == "point":
            return {"kind": "point", "value": self.value}
        if self.kind == "uniform":
            return {"kind": "uniform", "low": self.low, "high": self.high}
        if self.kind == "beta":
            return {"kind": "beta", "a": self.a, "b": self.b}
        return {"kind": "mixture", "hard_fraction": self.hard_fraction,
                "hard": list(self.hard), "easy": list(self.easy)}

    def draw(self, rng: np.random.Generator) -> float:
        if self.kind == "point":
            return float(self.value)
        if self.kind == "uniform":
            return float(rng.uniform(self.low, self.high))
        if self.kind == "beta":
            return float(rng.beta(self.a, self.b))
        lo, hi = self.hard if rng.random() < self.hard_fraction else self.easy
        return float(rng.uniform(lo, hi))


@dataclass(frozen=True)
class PoolSpec:
    n: int
    n_classes: int
    seed: int = 0
    test_size: int = 0
    difficulty_mix: DifficultyMix = field(default_factory=DifficultyMix)
    class_weights: tuple[float, ...] | None = None
    class_names: tuple[str, ...] | None = None
    max_boxes: int = 3

    def __post_init__(self) -> None:
        if not isinstance(self.n, int) or self.n < 1:
            raise SpecError(f"n must be >= 1, got {self.n!r}")
        if not isinstance(self.n_classes, int) or self.n_classes < 1:
            raise SpecError(f"n_classes must be >= 1, got {self.n_classes!r}")
        if self.test_size < 0 or self.max_boxes < 1:
            raise SpecError("test_size must be >= 0 and max_boxes >= 1")
        if self.class_weights is not None:
            w = self.class_weights
            if len(w) != self.n_classes or any(x < 0 for x in w) or sum(w) <= 0:
                raise SpecError("class_weights must be n_classes non-negative values with positive sum")
        if self.class_names is not None and len(self.class_names) != self.n_classes:
            raise SpecError("class_names must have n_classes entries")

    @classmethod
    def from_dict(cls, data: Mapping) -> "PoolSpec":
        data = dict(data)
        if "C" in data:
            data["n_classes"] = data.pop("C")
        for key in ("n", "n_classes"):
            if key not in data:
                raise SpecError(f"pool spec is missing {key!r}")
        data["difficulty_mix"] = DifficultyMix.from_dict(data.get("difficulty_mix"))
        for key in ("class_weights", "class_names"):
            if data.get(key) is not None:
                data[key] = tuple(data[key])
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise SpecError(f"unknown pool spec fields {sorted(unknown)}")
        return cls(**data)

    def catalog(self) -> ClassCatalog:
        names = self.class_names or tuple(f"class_{i}" for i in range(self.n_classes))
        return ClassCatalog(tuple(names))


def _synthetic_sample(spec: PoolSpec, split: str, index: int, probs: np.ndarray) -> SampleRef:
    rng = keyed_generator("pool", spec.seed, split, index)
    width = float(rng.integers(300, 501))
    height = float(rng.integers(250, 401))
    d = spec.difficulty_mix.draw(rng)
    n_boxes = int(rng.integers(1, spec.max_boxes + 1))
    annotations = []
    for _ in range(n_boxes):
        c = int(rng.choice(spec.n_classes, p=probs))
        bw = float(rng.uniform(0.15, 0.5)) * width
        bh = float(rng.uniform(0.15, 0.5)) * height
        x0 = float(rng.uniform(0.0, width - bw))
        y0 = float(rng.uniform(0.0, height - bh))
        annotations.append(Annotation(BoundingBox(x0, y0, min(x0 + bw, width), min(y0 + bh, height)), c))
    prefix = "s" if split == "train" else "t"
    return SampleRef(f"{prefix}{index:05d}", f"synthetic://{split}/{index}", width, height,
                     tuple(annotations), split, d)


def generate_pool(spec: PoolSpec) -> tuple[ClassCatalog, list[SampleRef]]:
    """Deterministic synthetic pool: ``spec.n`` mining samples then ``spec.test_size`` test samples."""
    weights = np.asarray(spec.class_weights or [1.0] * spec.n_classes, dtype=np.float64)
    probs = weights / weights.sum()
    samples = [_synthetic_sample(spec, "train", i, probs) for i in range(spec.n)]
    samples += [_synthetic_sample(spec, "test", i, probs) for i in range(spec.test_size)]
    return spec.catalog(), samples


# ---------------------------------------------------------------- training


def skill_from_weight(total_weight: float, alpha: float) -> float:
    """``1 - exp(-alpha * W)``, kept strictly below 1."""
    return min(-math.expm1(-alpha * total_weight), _MAX_SKILL)


def class_weights_of(labeled: Sequence[SampleRef], n_classes: int, w_min: float) -> list[float]:
    # fsum keeps W independent of sample order, hence monotone under set inclusion
    parts: list[list[float]] = [[] for _ in range(n_classes)]
    for sample in labeled:
        w = max(sample.difficulty or 0.0, w_min)
        for c in sorted({a.class_id for a in sample.annotations}):
            if c >= n_classes:
                raise UnknownClassError(f"{sample.sample_id}: class {c} outside catalog")
            parts[c].append(w)
    return [math.fsum(p) for p in parts]


def train_sim(labeled: Sequence[SampleRef], n_classes: int, hyper: SimHyper = SimHyper(),
              training_version: str = "") -> SimModel:
    if not labeled:
        raise EmptyTrainingSetError("empty training set")
    totals = class_weights_of(labeled, n_classes, hyper.w_min)
    return SimModel(tuple(skill_from_weight(w, hyper.alpha) for w in totals), training_version, hyper)


# ---------------------------------------------------------------- inference


def true_class_prob(skill: float, difficulty: float, gamma: float, n_classes: int) -> float:
    if n_classes == 1:
        return 1.0
    return min(max(skill * (1.0 - difficulty) + gamma, 1.0 / n_classes), 1.0 - 1e-6)


def _two_level(q: float, c: int, n_classes: int) -> tuple[float, ...]:
    if n_classes == 1:
        return (1.0,)
    rest = (1.0 - q) / (n_classes - 1)
    return tuple(q if i == c else rest for i in range(n_classes))


def _clip_box(x0, y0, x1, y1, width, height) -> BoundingBox:
    x0, x1 = sorted((x0, x1))
    y0, y1 = sorted((y0, y1))
    x0 = min(max(x0, 0.0), width - 1.0)
    y0 = min(max(y0, 0.0), height - 1.0)
    x1 = max(min(x1, width), x0 + 1.0)
    y1 = max(min(y1, height), y0 + 1.0)
    return BoundingBox(x0, y0, x1, y1)


def flip_sample(sample: SampleRef) -> SampleRef:
    anns = tuple(Annotation(a.box.hflip(sample.width), a.class_id, a.difficult) for a in sample.annotations)
    return SampleRef(sample.sample_id, sample.source_uri, sample.width, sample.height, anns,
                     sample.split, sample.difficulty)


def infer_sim(model: SimModel, sample: SampleRef, key: tuple, view: str = "orig") -> list[Detection]:
    """Simulated detections for one image.

    All draws come from ``key`` alone, so the two views of an image share
    them: an object found in one view is found in the other, and false
    positives sit on the same image content.  Objects and false positives are
    placed in the original frame and mirrored for ``view="hflip"``; corner
    jitter is added in the view's own frame, which is what makes the views
    disagree on localisation.
    """
    if view not in ("orig", "hflip"):
        raise ValueError(f"unknown view {view!r}")
    h = model.hyper
    n_classes = len(model.skills)
    d = sample.difficulty or 0.0
    flip = view == "hflip"
    rng = keyed_generator("infer", *key)
    dets = []
    for ann in sample.annotations:
        if not 0 <= ann.class_id < n_classes:
            raise UnknownClassError(f"{sample.sample_id}: class {ann.class_id} outside catalog")
        s = model.skills[ann.class_id]
        u = rng.random()
        noise = rng.standard_normal(4)
        if u >= s * (1.0 - h.beta * d):
            continue
        gt = ann.box.hflip(sample.width) if flip else ann.box
        scale = h.sigma0 * gt.diagonal * (1.0 - s) * (1.0 + d)
        x0, y0, x1, y1 = (v + float(n) * scale for v, n in zip(gt.as_tuple(), noise))
        box = _clip_box(x0, y0, x1, y1, sample.width, sample.height)
        q = true_class_prob(s, d, h.gamma, n_classes)
        dets.append(Detection(box, _two_level(q, ann.class_id, n_classes), ann.class_id))

    mean_skill = math.fsum(model.skills) / n_classes
    n_fp = int(rng.poisson(h.lambda0 * max(0.0, 1.0 - mean_skill)))
    for _ in range(n_fp):
        c = int(rng.integers(n_classes))
        bw = float(rng.uniform(0.1, 0.4)) * sample.width
        bh = float(rng.uniform(0.1, 0.4)) * sample.height
        x0 = float(rng.uniform(0.0, sample.width - bw))
        y0 = float(rng.uniform(0.0, sample.height - bh))
        weights = 1.0 + 0.1 * rng.random(n_classes)
        weights[c] = 1.2
        probs = weights / weights.sum()
        box = _clip_box(x0, y0, x0 + bw, y0 + bh, sample.width, sample.height)
        if flip:
            box = box.hflip(sample.width)
        dets.append(Detection(box, tuple(float(p) for p in probs), c))
    return dets
