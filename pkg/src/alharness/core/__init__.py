from .ingest import (
    VOC_CLASSES,
    ingest_voc_dir,
    load_index,
    parse_coco_index,
    parse_index,
    parse_voc_annotation,
    parse_voc_sample,
    serialize_index,
    write_index,
)
from .types import Annotation, BoundingBox, ClassCatalog, DatasetVersion, Detection, SampleRef
from .versions import augment_version, create_initial_version, load_version, save_version

__all__ = [
    "Annotation",
    "BoundingBox",
    "ClassCatalog",
    "DatasetVersion",
    "Detection",
    "SampleRef",
    "VOC_CLASSES",
    "augment_version",
    "create_initial_version",
    "ingest_voc_dir",
    "load_index",
    "load_version",
    "parse_coco_index",
    "parse_index",
    "parse_voc_annotation",
    "parse_voc_sample",
    "save_version",
    "serialize_index",
    "write_index",
]
