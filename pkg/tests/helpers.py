"""Shared set-up for the protocol and run-level tests."""
from __future__ import annotations

import json
from pathlib import Path

from alharness.core import DatasetVersion, load_index
from alharness.orchestrator import RunConfig, StopCriteria
from alharness.plugin import builtin_manifest, prepare_task, run_score_task
from alharness.plugin.staging import stage_score_inputs
from alharness.sim import infer_sim, train_sim
from alharness.strategies import StrategyInputs, score_candidates
from alharness.strategies.builtin import BUILTIN_STRATEGIES


def score_both_ways(name, pool_path: Path, workdir: Path, n_candidates=500, seed=5, iteration=1):
    """Score the same candidates in-process and through the subprocess plugin."""
    catalog, samples = load_index(pool_path)
    train = [s for s in samples if s.split == "train"]
    model = train_sim(train[:100], catalog.size, training_version="v0")
    candidates = train[100:100 + n_candidates]
    ids = [s.sample_id for s in candidates]
    requires = BUILTIN_STRATEGIES[name][1]
    dets = hdets = None
    if "detections" in requires:
        dets = {s.sample_id: infer_sim(model, s, (seed, iteration, s.sample_id)) for s in candidates}
    if "hflip_detections" in requires:
        hdets = {s.sample_id: infer_sim(model, s, (seed, iteration, s.sample_id), "hflip") for s in candidates}
    inputs = StrategyInputs(ids, seed, iteration, dets, hdets, {s.sample_id: s.width for s in candidates})
    local = score_candidates(name, inputs, {})
    task = prepare_task(workdir / name, "score", seed, iteration)
    stage_score_inputs(task, catalog, candidates, name, {}, dets, hdets)
    remote = run_score_task(builtin_manifest("strategy", name), task)
    return local, remote


def desk_config(pool: Path, method: str, seed: int = 0, **over) -> RunConfig:
    base = dict(pool=str(pool), method=method, n_initial=100, k_per_iteration=100,
                stop=StopCriteria(max_iterations=4), seed=seed)
    base.update(over)
    return RunConfig(**base)


def read_json(path: Path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def version_of(run_dir: Path, k: int) -> DatasetVersion:
    return DatasetVersion.from_dict(read_json(Path(run_dir) / f"version_{k}.json"))
