"""Writing task inputs (host side) and reading them back (plugin side)."""
from __future__ import annotations

import json
import shutil
from pathlib import Path
from typing import Mapping, Sequence

from ..core.detio import read_detections, write_detections
from ..core.ingest import parse_index, serialize_index
from ..core.types import ClassCatalog, DatasetVersion, Detection, SampleRef
from ..errors import HarnessIOError
from ..strategies.builtin import StrategyInputs
from .protocol import (
    CANDIDATES_FILE,
    DETECTIONS_FILE,
    HFLIP_DETECTIONS_FILE,
    LABELED_FILE,
    MODEL_DIR,
    STRATEGY_FILE,
    TRAINER_FILE,
    VERSION_FILE,
    TaskDir,
)


def _write(path: Path, text: str) -> None:
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise HarnessIOError(f"cannot write {path}: {exc}") from None


def stage_score_inputs(
    task: TaskDir,
    catalog: ClassCatalog,
    candidates: Sequence[SampleRef],
    strategy_name: str,
    params: Mapping,
    detections: Mapping[str, Sequence[Detection]] | None = None,
    hflip_detections: Mapping[str, Sequence[Detection]] | None = None,
    model_dir: Path | None = None,
) -> None:
    in_dir = task.in_dir
    # candidates go out without ground truth
    _write(in_dir / CANDIDATES_FILE, serialize_index(catalog, [s.unlabeled() for s in candidates]))
    _write(in_dir / STRATEGY_FILE, json.dumps({"name": strategy_name, "params": dict(params)}, indent=1) + "\n")
    order = [s.sample_id for s in candidates]
    if detections is not None:
        write_detections(in_dir / DETECTIONS_FILE, detections, order)
    if hflip_detections is not None:
        write_detections(in_dir / HFLIP_DETECTIONS_FILE, hflip_detections, order)
    if model_dir is not None:
        shutil.copytree(model_dir, in_dir / MODEL_DIR, dirs_exist_ok=True)


def stage_train_inputs(
    task: TaskDir,
    catalog: ClassCatalog,
    labeled: Sequence[SampleRef],
    version: DatasetVersion,
    params: Mapping,
) -> None:
    in_dir = task.in_dir
    _write(in_dir / LABELED_FILE, serialize_index(catalog, labeled))
    _write(in_dir / VERSION_FILE, json.dumps(version.to_dict(), indent=1) + "\n")
    _write(in_dir / TRAINER_FILE, json.dumps({"params": dict(params)}, indent=1) + "\n")


def read_score_inputs(task: TaskDir) -> tuple[StrategyInputs, dict]:
    in_dir = task.in_dir
    _, candidates = parse_index((in_dir / CANDIDATES_FILE).read_text(encoding="utf-8"))
    ids = [s.sample_id for s in candidates]
    config = json.loads((in_dir / STRATEGY_FILE).read_text(encoding="utf-8"))
    inputs = StrategyInputs(
        candidate_ids=ids,
        seed=task.envelope.seed,
        iteration=task.envelope.iteration,
        image_widths={s.sample_id: s.width for s in candidates},
    )
    if (in_dir / DETECTIONS_FILE).is_file():
        inputs.detections = read_detections(in_dir / DETECTIONS_FILE, ids)
    if (in_dir / HFLIP_DETECTIONS_FILE).is_file():
        inputs.hflip_detections = read_detections(in_dir / HFLIP_DETECTIONS_FILE, ids)
    return inputs, dict(config.get("params", {}))


def read_train_inputs(task: TaskDir) -> tuple[ClassCatalog, list[SampleRef], DatasetVersion, dict]:
    in_dir = task.in_dir
    catalog, labeled = parse_index((in_dir / LABELED_FILE).read_text(encoding="utf-8"))
    version = DatasetVersion.from_dict(json.loads((in_dir / VERSION_FILE).read_text(encoding="utf-8")))
    config = json.loads((in_dir / TRAINER_FILE).read_text(encoding="utf-8"))
    return catalog, labeled, version, dict(config.get("params", {}))
