"""Versioned labeled/unlabeled splits of one sample pool."""
from __future__ import annotations

import json
import re
from pathlib import Path
from typing import Sequence

from ..errors import BudgetError, DuplicateSampleError, HarnessIOError, SelectionConsistencyError
from ..rng import randbelow, split_rng
from .types import DatasetVersion, SampleRef


def create_initial_version(
    pool: Sequence[SampleRef] | Sequence[str], n_initial: int, seed: int, version_id: str = "v0"
) -> DatasetVersion:
    """Draw ``n_initial`` ids uniformly without replacement.

    Partial Fisher-Yates over the pool order, driven by MT19937 seeded with
    ``seed``.  Both id lists keep pool order.
    """
    ids = [p if isinstance(p, str) else p.sample_id for p in pool]
    if len(set(ids)) != len(ids):
        raise DuplicateSampleError("pool contains duplicate sample ids")
    if n_initial < 0 or n_initial > len(ids):
        raise BudgetError(f"n_initial={n_initial} not in [0, {len(ids)}]")
    rng = split_rng(seed)
    positions = list(range(len(ids)))
    for i in range(n_initial):
        j = i + randbelow(rng, len(ids) - i)
        positions[i], positions[j] = positions[j], positions[i]
    chosen = set(positions[:n_initial])
    labeled = tuple(ids[i] for i in range(len(ids)) if i in chosen)
    unlabeled = tuple(ids[i] for i in range(len(ids)) if i not in chosen)
    return DatasetVersion(version_id, labeled, unlabeled, None)


def _child_id(parent_id: str) -> str:
    m = re.fullmatch(r"(.*?)(\d+)", parent_id)
    if m:
        return f"{m.group(1)}{int(m.group(2)) + 1}"
    return f"{parent_id}-1"


def augment_version(
    v: DatasetVersion, newly_selected: Sequence[str], version_id: str | None = None
) -> DatasetVersion:
    """Move ``newly_selected`` from unlabeled to labeled in a child version.

    Newly labeled ids are appended in selection order.
    """
    if len(set(newly_selected)) != len(newly_selected):
        raise SelectionConsistencyError("selection contains duplicate ids")
    unlabeled = set(v.unlabeled_ids)
    labeled = set(v.labeled_ids)
    for sid in newly_selected:
        if sid in labeled:
            raise SelectionConsistencyError(f"{sid!r} is already labeled in {v.version_id}")
        if sid not in unlabeled:
            raise SelectionConsistencyError(f"{sid!r} is not in the pool of {v.version_id}")
    chosen = set(newly_selected)
    return DatasetVersion(
        version_id or _child_id(v.version_id),
        v.labeled_ids + tuple(newly_selected),
        tuple(i for i in v.unlabeled_ids if i not in chosen),
        v.version_id,
    )


def version_path(run_dir: Path, k: int) -> Path:
    return Path(run_dir) / f"version_{k}.json"


def save_version(path: Path, v: DatasetVersion) -> None:
    try:
        Path(path).write_text(json.dumps(v.to_dict(), indent=1) + "\n", encoding="utf-8")
    except OSError as exc:
        raise HarnessIOError(f"cannot write {path}: {exc}") from None


def load_version(path: Path) -> DatasetVersion:
    return DatasetVersion.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
