"""``detections.jsonl``: one detection per line.

Fields: ``sample_id``, ``class_id``, ``box`` (corner form) and ``class_probs``.
Floats are written with ``repr`` so they round-trip exactly.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from ..errors import HarnessIOError, KeyMismatchError, ParseError
from .types import BoundingBox, Detection


def detection_record(sample_id: str, det: Detection) -> dict:
    return {
        "sample_id": sample_id,
        "class_id": det.class_id,
        "box": list(det.box.as_tuple()),
        "class_probs": list(det.class_probs),
    }


def dumps_detections(per_image: Mapping[str, Sequence[Detection]], order: Iterable[str] | None = None) -> str:
    ids = list(order) if order is not None else list(per_image)
    lines = [
        json.dumps(detection_record(sid, det))
        for sid in ids
        for det in per_image.get(sid, ())
    ]
    return "".join(line + "\n" for line in lines)


def write_detections(path: Path, per_image: Mapping[str, Sequence[Detection]],
                     order: Iterable[str] | None = None) -> None:
    try:
        Path(path).write_text(dumps_detections(per_image, order), encoding="utf-8")
    except OSError as exc:
        raise HarnessIOError(f"cannot write {path}: {exc}") from None


def parse_detections(text: str, expected_ids: Iterable[str] | None = None,
                     source: str | None = None) -> dict[str, list[Detection]]:
    """Group detections by sample.

    With ``expected_ids`` every listed id gets an entry (possibly empty) and
    any other id is a :class:`KeyMismatchError`.
    """
    out: dict[str, list[Detection]] = {}
    allowed = None
    if expected_ids is not None:
        out = {sid: [] for sid in expected_ids}
        allowed = set(out)
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            sid = str(rec["sample_id"])
            det = Detection(
                BoundingBox(*(float(v) for v in rec["box"])),
                tuple(float(p) for p in rec["class_probs"]),
                int(rec.get("class_id", -1)),
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad detection record ({exc})", line=lineno, source=source) from None
        if allowed is not None and sid not in allowed:
            raise KeyMismatchError(f"detection for unknown sample {sid!r}")
        out.setdefault(sid, []).append(det)
    return out


def read_detections(path: Path, expected_ids: Iterable[str] | None = None) -> dict[str, list[Detection]]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise HarnessIOError(f"cannot read {path}: {exc}") from None
    return parse_detections(text, expected_ids, source=str(path))
