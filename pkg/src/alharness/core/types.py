"""Canonical data model shared by every module."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from ..errors import DegenerateBoxError, InvalidBoxError, NormalizationError, UnknownClassError

PROB_TOL = 1e-6


@dataclass(frozen=True, order=True)
class BoundingBox:
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self) -> None:
        coords = (self.x_min, self.y_min, self.x_max, self.y_max)
        if not all(math.isfinite(c) for c in coords):
            raise InvalidBoxError(f"non-finite box coordinates {coords}")
        if min(coords) < 0:
            raise InvalidBoxError(f"negative box coordinates {coords}")
        if self.x_max <= self.x_min or self.y_max <= self.y_min:
            raise DegenerateBoxError(f"box has no area: {coords}")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def diagonal(self) -> float:
        return math.hypot(self.width, self.height)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x_min, self.y_min, self.x_max, self.y_max)

    def within(self, width: float, height: float) -> bool:
        return self.x_max <= width and self.y_max <= height

    def hflip(self, image_width: float) -> "BoundingBox":
        return BoundingBox(image_width - self.x_max, self.y_min, image_width - self.x_min, self.y_max)


@dataclass(frozen=True)
class ClassCatalog:
    names: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "names", tuple(self.names))
        if not self.names:
            raise ValueError("class catalog is empty")
        if any(not n for n in self.names):
            raise ValueError("class names must be non-empty")
        if len(set(self.names)) != len(self.names):
            raise ValueError("class names must be unique")
        object.__setattr__(self, "_index", {n: i for i, n in enumerate(self.names)})

    @property
    def size(self) -> int:
        return len(self.names)

    def __len__(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self._index[name]  # type: ignore[attr-defined]
        except KeyError:
            raise UnknownClassError(f"unknown class {name!r}") from None

    def check(self, class_id: int) -> None:
        if not 0 <= class_id < len(self.names):
            raise UnknownClassError(f"class id {class_id} outside [0, {len(self.names)})")


@dataclass(frozen=True)
class Annotation:
    box: BoundingBox
    class_id: int
    difficult: bool = False


@dataclass(frozen=True)
class SampleRef:
    sample_id: str
    source_uri: str
    width: float
    height: float
    annotations: tuple[Annotation, ...] = ()
    split: str = "train"
    # Only present for synthetic pools.
    difficulty: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "annotations", tuple(self.annotations))
        for ann in self.annotations:
            if not ann.box.within(self.width, self.height):
                raise InvalidBoxError(
                    f"{self.sample_id}: box {ann.box.as_tuple()} outside image "
                    f"{self.width}x{self.height}"
                )

    def unlabeled(self) -> "SampleRef":
        return SampleRef(self.sample_id, self.source_uri, self.width, self.height, (), self.split, None)


@dataclass(frozen=True)
class Detection:
    """One predicted box.

    ``class_id`` is the predicted label; it defaults to the argmax of
    ``class_probs`` (lowest index on ties).
    """

    box: BoundingBox
    class_probs: tuple[float, ...]
    class_id: int = -1

    def __post_init__(self) -> None:
        probs = tuple(float(p) for p in self.class_probs)
        object.__setattr__(self, "class_probs", probs)
        if not probs:
            raise NormalizationError("empty class_probs")
        if any(not math.isfinite(p) or p < 0 for p in probs):
            raise NormalizationError(f"invalid probabilities {probs}")
        if abs(math.fsum(probs) - 1.0) > PROB_TOL:
            raise NormalizationError(f"class_probs sum to {math.fsum(probs)}, not 1")
        if self.class_id < 0:
            object.__setattr__(self, "class_id", max(range(len(probs)), key=probs.__getitem__))
        elif self.class_id >= len(probs):
            raise UnknownClassError(f"class id {self.class_id} outside [0, {len(probs)})")

    @property
    def confidence(self) -> float:
        return max(self.class_probs)


@dataclass(frozen=True)
class DatasetVersion:
    version_id: str
    labeled_ids: tuple[str, ...]
    unlabeled_ids: tuple[str, ...]
    parent_version: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "labeled_ids", tuple(self.labeled_ids))
        object.__setattr__(self, "unlabeled_ids", tuple(self.unlabeled_ids))
        labeled = set(self.labeled_ids)
        unlabeled = set(self.unlabeled_ids)
        if len(labeled) != len(self.labeled_ids) or len(unlabeled) != len(self.unlabeled_ids):
            raise ValueError(f"version {self.version_id} has duplicate ids")
        if labeled & unlabeled:
            raise ValueError(f"version {self.version_id}: labeled and unlabeled overlap")

    @property
    def pool_size(self) -> int:
        return len(self.labeled_ids) + len(self.unlabeled_ids)

    def to_dict(self) -> dict:
        return {
            "version_id": self.version_id,
            "parent_version": self.parent_version,
            "labeled_ids": list(self.labeled_ids),
            "unlabeled_ids": list(self.unlabeled_ids),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DatasetVersion":
        return cls(
            version_id=data["version_id"],
            labeled_ids=tuple(data["labeled_ids"]),
            unlabeled_ids=tuple(data["unlabeled_ids"]),
            parent_version=data.get("parent_version"),
        )


def index_by_id(samples: Iterable[SampleRef]) -> dict[str, SampleRef]:
    return {s.sample_id: s for s in samples}


def class_ids(annotations: Sequence[Annotation]) -> set[int]:
    return {a.class_id for a in annotations}


__all__ = [
    "Annotation",
    "BoundingBox",
    "ClassCatalog",
    "DatasetVersion",
    "Detection",
    "SampleRef",
    "class_ids",
    "index_by_id",
]
