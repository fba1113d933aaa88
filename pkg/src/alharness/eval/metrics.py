"""IoU, greedy matching, precision-recall and average precision."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ..core.types import Annotation, BoundingBox, ClassCatalog, Detection
from ..errors import KeyMismatchError, UndefinedAPError
from . import backend

TP, FP, IGNORED = 1, 0, -1
VARIANTS = ("all_points", "11pt")


def iou(a: BoundingBox, b: BoundingBox) -> float:
    return backend._kernels_py._iou(*a.as_tuple(), *b.as_tuple())


@dataclass(frozen=True)
class MatchEntry:
    confidence: float
    box: tuple[float, float, float, float]
    sample_id: str
    flag: int
    gt_index: int | None

    def sort_key(self):
        return (-self.confidence, self.box, self.sample_id)


@dataclass
class MatchResult:
    """Single-class matching outcome, entries in descending confidence."""

    entries: list[MatchEntry] = field(default_factory=list)
    n_gt: int = 0

    @property
    def flags(self) -> np.ndarray:
        return np.array([e.flag for e in self.entries if e.flag != IGNORED], dtype=np.int8)

    def pr_curve(self) -> tuple[list[float], list[float]]:
        precision, recall = [], []
        tp = 0
        for i, f in enumerate(self.flags.tolist()):
            tp += f
            precision.append(tp / (i + 1))
            recall.append(tp / self.n_gt if self.n_gt else 0.0)
        return precision, recall


def _sorted_dets(dets: Sequence[Detection]) -> list[Detection]:
    return sorted(dets, key=lambda d: (-d.confidence, d.box.as_tuple()))


def _boxes(items) -> np.ndarray:
    if not items:
        return np.zeros((0, 4), dtype=np.float64)
    return np.ascontiguousarray([b.as_tuple() for b in items], dtype=np.float64)


def match_detections(
    dets: Sequence[Detection],
    gts: Sequence[Annotation],
    iou_thr: float = 0.5,
    sample_id: str = "",
    include_difficult: bool = False,
    kernels=None,
) -> MatchResult:
    """Match one image's detections of a single class against its ground truth.

    Detections are visited by descending confidence (ties: ascending box
    corners).  Each takes the unmatched, non-difficult ground truth of highest
    IoU if that IoU reaches ``iou_thr``.  A detection whose only qualifying
    overlap is with difficult ground truth is ignored.
    """
    k = kernels or backend.kernels
    ordered = _sorted_dets(dets)
    difficult = np.array([g.difficult and not include_difficult for g in gts], dtype=np.uint8)
    flags, matched = k.match_image(_boxes([d.box for d in ordered]), _boxes([g.box for g in gts]),
                                   difficult, float(iou_thr))
    entries = [
        MatchEntry(d.confidence, d.box.as_tuple(), sample_id, int(f), int(m) if m >= 0 else None)
        for d, f, m in zip(ordered, flags.tolist(), matched.tolist())
    ]
    return MatchResult(entries, int(len(gts) - difficult.sum()))


def pool_matches(results: Sequence[MatchResult]) -> MatchResult:
    entries = [e for r in results for e in r.entries]
    entries.sort(key=MatchEntry.sort_key)
    return MatchResult(entries, sum(r.n_gt for r in results))


def average_precision(match: MatchResult, variant: str = "all_points", kernels=None) -> float:
    """AP of a confidence-ordered match list.

    ``all_points`` is the area under the monotone precision envelope;
    ``11pt`` averages the best precision at recall >= 0, 0.1, ..., 1.0.
    """
    if match.n_gt <= 0:
        raise UndefinedAPError("average precision is undefined without ground truth")
    k = kernels or backend.kernels
    flags = np.ascontiguousarray(match.flags, dtype=np.int8)
    if variant == "all_points":
        return float(k.ap_all_points(flags, match.n_gt))
    if variant == "11pt":
        return float(k.ap_11pt(flags, match.n_gt))
    raise ValueError(f"unknown AP variant {variant!r}")


@dataclass
class EvalReport:
    per_class_ap: dict[str, float]
    mAP: float
    counts: dict[str, int]
    ap_variant: str = "all_points"
    iou_threshold: float = 0.5
    excluded_classes: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "ap_variant": self.ap_variant,
            "iou_threshold": self.iou_threshold,
            "mAP": self.mAP,
            "per_class_ap": dict(self.per_class_ap),
            "excluded_classes": list(self.excluded_classes),
            "counts": dict(self.counts),
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EvalReport":
        return cls(
            per_class_ap={k: float(v) for k, v in data["per_class_ap"].items()},
            mAP=float(data["mAP"]),
            counts=dict(data["counts"]),
            ap_variant=data.get("ap_variant", "all_points"),
            iou_threshold=float(data.get("iou_threshold", 0.5)),
            excluded_classes=list(data.get("excluded_classes", [])),
            notes=list(data.get("notes", [])),
        )


def class_matches(
    detections: Mapping[str, Sequence[Detection]],
    gts: Mapping[str, Sequence[Annotation]],
    n_classes: int,
    iou_thr: float = 0.5,
    include_difficult: bool = False,
    kernels=None,
) -> list[MatchResult]:
    if set(detections) != set(gts):
        missing = sorted(set(gts) - set(detections))[:3]
        extra = sorted(set(detections) - set(gts))[:3]
        raise KeyMismatchError(f"sample ids differ (missing detections for {missing}, "
                               f"unknown samples {extra})")
    per_class: list[list[MatchResult]] = [[] for _ in range(n_classes)]
    for sid in sorted(gts):
        img_dets: list[list[Detection]] = [[] for _ in range(n_classes)]
        img_gts: list[list[Annotation]] = [[] for _ in range(n_classes)]
        for d in detections[sid]:
            img_dets[d.class_id].append(d)
        for g in gts[sid]:
            img_gts[g.class_id].append(g)
        for c in range(n_classes):
            if img_dets[c] or img_gts[c]:
                per_class[c].append(match_detections(img_dets[c], img_gts[c], iou_thr, sid,
                                                     include_difficult, kernels))
    return [pool_matches(rs) for rs in per_class]


def evaluate_run(
    detections: Mapping[str, Sequence[Detection]],
    gts: Mapping[str, Sequence[Annotation]],
    catalog: ClassCatalog,
    iou_thr: float = 0.5,
    variant: str = "all_points",
    include_difficult: bool = False,
    kernels=None,
) -> EvalReport:
    """Per-class AP and mAP over a set of images.

    Classes without (non-difficult) ground truth are left out of the mean and
    listed in ``excluded_classes``.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown AP variant {variant!r}")
    pooled = class_matches(detections, gts, catalog.size, iou_thr, include_difficult, kernels)
    per_class: dict[str, float] = {}
    excluded = []
    for name, match in zip(catalog.names, pooled):
        if match.n_gt == 0:
            excluded.append(name)
            continue
        per_class[name] = average_precision(match, variant, kernels)
    notes = []
    if excluded:
        notes.append(f"excluded from mAP (no ground truth): {', '.join(excluded)}")
    if per_class:
        m_ap = math.fsum(per_class.values()) / len(per_class)
    else:
        m_ap = 0.0
        notes.append("no class has ground truth; mAP reported as 0")
    counts = {
        "images": len(gts),
        "gts": sum(len(v) for v in gts.values()),
        "detections": sum(len(v) for v in detections.values()),
    }
    return EvalReport(per_class, m_ap, counts, variant, float(iou_thr), excluded, notes)
