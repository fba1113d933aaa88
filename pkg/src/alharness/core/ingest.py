"""Annotation ingestion: VOC XML, COCO JSON and the canonical JSONL index."""
from __future__ import annotations

import json
import math
import xml.etree.ElementTree as ET
from pathlib import Path
from typing import Iterable, Sequence

from ..errors import (
    DuplicateSampleError,
    HarnessIOError,
    InvalidBoxError,
    ParseError,
    ReferentialIntegrityError,
)
from .types import Annotation, BoundingBox, ClassCatalog, SampleRef

INDEX_FORMAT = "alharness-index/1"

VOC_CLASSES = (
    "aeroplane", "bicycle", "bird", "boat", "bottle", "bus", "car", "cat",
    "chair", "cow", "diningtable", "dog", "horse", "motorbike", "person",
    "pottedplant", "sheep", "sofa", "train", "tvmonitor",
)


def _voc_root(xml_text: str, source: str | None) -> ET.Element:
    try:
        return ET.fromstring(xml_text)
    except ET.ParseError as exc:
        line = exc.position[0] if exc.position else None
        raise ParseError(f"malformed XML ({exc})", line=line, source=source) from None


def _text(elem: ET.Element, tag: str, source: str | None) -> str:
    child = elem.find(tag)
    if child is None or child.text is None:
        raise ParseError(f"<{elem.tag}> is missing <{tag}>", source=source)
    return child.text.strip()


def _number(elem: ET.Element, tag: str, source: str | None) -> float:
    raw = _text(elem, tag, source)
    try:
        value = float(raw)
    except ValueError:
        raise ParseError(f"<{tag}> is not a number: {raw!r}", source=source) from None
    if not math.isfinite(value):
        raise ParseError(f"<{tag}> is not finite: {raw!r}", source=source)
    return value


def _voc_objects(root: ET.Element, catalog: ClassCatalog, source: str | None) -> list[Annotation]:
    annotations = []
    for obj in root.iter("object"):
        class_id = catalog.index(_text(obj, "name", source))
        bndbox = obj.find("bndbox")
        if bndbox is None:
            raise ParseError("<object> is missing <bndbox>", source=source)
        coords = [_number(bndbox, tag, source) for tag in ("xmin", "ymin", "xmax", "ymax")]
        difficult = obj.find("difficult")
        flag = difficult is not None and (difficult.text or "0").strip() not in ("0", "")
        annotations.append(Annotation(BoundingBox(*coords), class_id, flag))
    return annotations


def parse_voc_annotation(
    xml_text: str, catalog: ClassCatalog, source: str | None = None
) -> list[Annotation]:
    """Return one :class:`Annotation` per ``<object>`` with coordinates copied verbatim."""
    return _voc_objects(_voc_root(xml_text, source), catalog, source)


def parse_voc_sample(
    xml_text: str, catalog: ClassCatalog, source: str | None = None, split: str = "train"
) -> SampleRef:
    root = _voc_root(xml_text, source)
    filename = _text(root, "filename", source)
    size = root.find("size")
    if size is None:
        raise ParseError("annotation is missing <size>", source=source)
    width = _number(size, "width", source)
    height = _number(size, "height", source)
    sample_id = Path(filename).stem
    return SampleRef(sample_id, filename, width, height, tuple(_voc_objects(root, catalog, source)), split)


def ingest_voc_dir(
    src: Path, catalog: ClassCatalog, test_ids: Iterable[str] = ()
) -> list[SampleRef]:
    test = set(test_ids)
    src = Path(src)
    # accept either the XML directory itself or a devkit root holding Annotations/
    if not any(src.glob("*.xml")) and (src / "Annotations").is_dir():
        src = src / "Annotations"
    files = sorted(src.glob("*.xml"))
    if not files:
        raise HarnessIOError(f"no .xml files under {src}")
    samples = []
    for path in files:
        sample = parse_voc_sample(path.read_text(encoding="utf-8"), catalog, source=str(path))
        if sample.sample_id in test:
            sample = SampleRef(sample.sample_id, sample.source_uri, sample.width, sample.height,
                               sample.annotations, "test")
        samples.append(sample)
    check_unique(samples)
    return samples


def parse_coco_index(json_text: str, source: str | None = None) -> tuple[ClassCatalog, list[SampleRef]]:
    """Parse a COCO detection index.

    Category ids are remapped to dense ``[0, C)`` in ascending order of the
    original id.  Boxes go from ``(x, y, w, h)`` to corner form.  ``iscrowd``
    annotations are kept with the difficult flag set.
    """
    try:
        data = json.loads(json_text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON ({exc.msg})", line=exc.lineno, source=source) from None
    for key in ("images", "annotations", "categories"):
        if key not in data:
            raise ParseError(f"missing top-level key {key!r}", source=source)

    categories = sorted(data["categories"], key=lambda c: c["id"])
    try:
        catalog = ClassCatalog(tuple(c["name"] for c in categories))
    except ValueError as exc:
        raise ParseError(f"bad categories: {exc}", source=source) from None
    dense = {c["id"]: i for i, c in enumerate(categories)}

    images = {}
    order = []
    for img in data["images"]:
        if img["id"] in images:
            raise DuplicateSampleError(f"duplicate image id {img['id']}")
        images[img["id"]] = img
        order.append(img["id"])

    per_image: dict[object, list[Annotation]] = {i: [] for i in order}
    for ann in data["annotations"]:
        if ann["image_id"] not in images:
            raise ReferentialIntegrityError(
                f"annotation {ann.get('id')} references missing image {ann['image_id']}"
            )
        if ann["category_id"] not in dense:
            raise ReferentialIntegrityError(
                f"annotation {ann.get('id')} references missing category {ann['category_id']}"
            )
        x, y, w, h = (float(v) for v in ann["bbox"])
        box = BoundingBox(x, y, x + w, y + h)
        per_image[ann["image_id"]].append(
            Annotation(box, dense[ann["category_id"]], bool(ann.get("iscrowd", 0)))
        )

    samples = [
        SampleRef(
            sample_id=str(i),
            source_uri=images[i].get("file_name", ""),
            width=float(images[i]["width"]),
            height=float(images[i]["height"]),
            annotations=tuple(per_image[i]),
        )
        for i in order
    ]
    check_unique(samples)
    return catalog, samples


def check_unique(samples: Sequence[SampleRef]) -> None:
    seen: set[str] = set()
    for s in samples:
        if s.sample_id in seen:
            raise DuplicateSampleError(f"duplicate sample_id {s.sample_id!r}")
        seen.add(s.sample_id)


def sample_to_record(sample: SampleRef) -> dict:
    record = {
        "sample_id": sample.sample_id,
        "uri": sample.source_uri,
        "width": sample.width,
        "height": sample.height,
        "split": sample.split,
    }
    if sample.difficulty is not None:
        record["difficulty"] = sample.difficulty
    record["annotations"] = [
        {"class_id": a.class_id, "box": list(a.box.as_tuple()), "difficult": a.difficult}
        for a in sample.annotations
    ]
    return record


def record_to_sample(record: dict, catalog: ClassCatalog | None = None) -> SampleRef:
    annotations = []
    for a in record.get("annotations", ()):
        if catalog is not None:
            catalog.check(a["class_id"])
        annotations.append(
            Annotation(BoundingBox(*(float(v) for v in a["box"])), int(a["class_id"]),
                       bool(a.get("difficult", False)))
        )
    difficulty = record.get("difficulty")
    return SampleRef(
        sample_id=str(record["sample_id"]),
        source_uri=record.get("uri", ""),
        width=float(record["width"]),
        height=float(record["height"]),
        annotations=tuple(annotations),
        split=record.get("split", "train"),
        difficulty=None if difficulty is None else float(difficulty),
    )


def serialize_index(catalog: ClassCatalog, samples: Sequence[SampleRef]) -> str:
    check_unique(samples)
    lines = [json.dumps({"format": INDEX_FORMAT, "classes": list(catalog.names)})]
    lines.extend(json.dumps(sample_to_record(s)) for s in samples)
    return "\n".join(lines) + "\n"


def parse_index(text: str, source: str | None = None) -> tuple[ClassCatalog, list[SampleRef]]:
    """Parse the canonical index: a header line followed by one sample per line."""
    catalog = None
    samples = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"malformed JSON ({exc.msg})", line=lineno, source=source) from None
        if catalog is None:
            if record.get("format") != INDEX_FORMAT:
                raise ParseError(f"expected {INDEX_FORMAT} header", line=lineno, source=source)
            catalog = ClassCatalog(tuple(record["classes"]))
            continue
        try:
            samples.append(record_to_sample(record, catalog))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad sample record ({exc!r})", line=lineno, source=source) from None
        except InvalidBoxError as exc:
            raise type(exc)(f"{source or 'index'}:{lineno}: {exc}") from None
    if catalog is None:
        raise ParseError("empty index", source=source)
    check_unique(samples)
    return catalog, samples


def load_index(path: Path | str) -> tuple[ClassCatalog, list[SampleRef]]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise HarnessIOError(f"cannot read index {path}: {exc}") from None
    return parse_index(text, source=str(path))


def write_index(path: Path | str, catalog: ClassCatalog, samples: Sequence[SampleRef]) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(serialize_index(catalog, samples), encoding="utf-8")
    except OSError as exc:
        raise HarnessIOError(f"cannot write index {path}: {exc}") from None
