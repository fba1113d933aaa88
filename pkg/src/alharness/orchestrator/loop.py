"""The benchmark loop: initial split, then score, select, augment, train, evaluate."""
from __future__ import annotations

import json
import logging
import shutil
import time
from dataclasses import dataclass, field
from pathlib import Path

from ..core.ingest import load_index
from ..core.types import ClassCatalog, DatasetVersion, SampleRef
from ..core.versions import augment_version, create_initial_version, load_version, save_version, version_path
from ..errors import (
    BudgetError,
    ConfigError,
    HarnessError,
    HarnessIOError,
    ManifestError,
    ProtocolViolation,
    ResumeError,
)
from ..eval.metrics import EvalReport, evaluate_run
from ..plugin.manifest import PluginManifest, resolve_plugin, validate_plugin
from ..plugin.protocol import ModelRef, prepare_task, run_score_task, run_train_task
from ..plugin.staging import stage_score_inputs, stage_train_inputs
from ..sim.env import MODEL_FORMAT, SimModel, infer_sim
from ..strategies.scoring import select_top_k
from .config import DEFAULT_TRAINER, RunConfig, dump_json, file_sha256, write_json_atomic

log = logging.getLogger(__name__)

RUNNING, COMPLETED, FAILED = "running", "completed", "failed"


@dataclass
class IterationRecord:
    iteration: int
    version_id: str
    labeled_size: int
    selected_ids: list[str]
    model_id: str
    checkpoint: str
    eval_report: EvalReport
    default_eval: EvalReport | None = None
    # kept out of to_dict so replays stay byte-identical
    wall_time: float | None = None

    def to_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "version_id": self.version_id,
            "labeled_size": self.labeled_size,
            "selected_ids": list(self.selected_ids),
            "model_id": self.model_id,
            "checkpoint": self.checkpoint,
            "eval": self.eval_report.to_dict(),
            "default_eval": None if self.default_eval is None else self.default_eval.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "IterationRecord":
        default = data.get("default_eval")
        return cls(
            iteration=int(data["iteration"]),
            version_id=data["version_id"],
            labeled_size=int(data["labeled_size"]),
            selected_ids=list(data["selected_ids"]),
            model_id=data["model_id"],
            checkpoint=data["checkpoint"],
            eval_report=EvalReport.from_dict(data["eval"]),
            default_eval=None if default is None else EvalReport.from_dict(default),
        )


@dataclass
class _Pool:
    catalog: ClassCatalog
    samples: dict[str, SampleRef]
    train_ids: list[str]
    test_ids: list[str]


@dataclass
class RunState:
    config: RunConfig
    run_dir: Path
    records: list[IterationRecord] = field(default_factory=list)
    status: str = RUNNING
    stop_reason: str | None = None
    error: str | None = None
    _pool: _Pool | None = field(default=None, repr=False)

    @property
    def cursor(self) -> int:
        """Index of the next iteration to run."""
        return len(self.records)

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "stop_reason": self.stop_reason,
            "error": self.error,
            "cursor": self.cursor,
            "records": [r.to_dict() for r in self.records],
        }

    @property
    def pool(self) -> _Pool:
        if self._pool is None:
            self._pool = _load_pool(self.config)
        return self._pool

    def version(self, k: int) -> DatasetVersion:
        return load_version(version_path(self.run_dir, k))

    def labeled_sizes(self) -> list[int]:
        return [r.labeled_size for r in self.records]


def _load_pool(config: RunConfig) -> _Pool:
    catalog, samples = load_index(config.pool)
    train = [s.sample_id for s in samples if s.split == "train"]
    test = [s.sample_id for s in samples if s.split == "test"]
    if not test:
        raise ConfigError(f"pool {config.pool} has no test split")
    if not train:
        raise ConfigError(f"pool {config.pool} has no train split")
    return _Pool(catalog, {s.sample_id: s for s in samples}, train, test)


def _manifests(config: RunConfig) -> tuple[PluginManifest, PluginManifest, PluginManifest | None]:
    method = resolve_plugin(config.method, "strategy", params=config.method_params)
    trainer = resolve_plugin(config.trainer, "trainer", params=config.trainer_params)
    default = None
    if config.retrain_default and config.trainer != DEFAULT_TRAINER:
        default = resolve_plugin(DEFAULT_TRAINER, "trainer")
    return method, trainer, default


def validate_plugins(config: RunConfig) -> list[str]:
    try:
        method, trainer, default = _manifests(config)
    except ManifestError as exc:
        return [str(exc)]
    problems = [f"method: {v}" for v in validate_plugin(method, "strategy")]
    problems += [f"trainer: {v}" for v in validate_plugin(trainer, "trainer")]
    if default is not None:
        problems += [f"default trainer: {v}" for v in validate_plugin(default, "trainer")]
    return problems


def _save_state(state: RunState) -> None:
    write_json_atomic(state.run_dir / "state.json", state.to_dict())


def _iter_dir(state: RunState, k: int) -> Path:
    return state.run_dir / f"iter_{k}"


# ---------------------------------------------------------------- model handling


def load_sim_model(model: ModelRef, artifact: str) -> SimModel:
    if model.model_format != MODEL_FORMAT:
        raise ProtocolViolation(f"unsupported model_format {model.model_format!r}")
    path = model.artifact_dir(artifact) / "sim_model.json"
    try:
        return SimModel.from_dict(json.loads(path.read_text(encoding="utf-8")))
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise ProtocolViolation(f"cannot load model artifact {artifact!r}: {exc}") from None


def evaluate_model(state: RunState, model: SimModel, iteration: int) -> EvalReport:
    cfg, pool = state.config, state.pool
    dets = {}
    gts = {}
    for sid in pool.test_ids:
        sample = pool.samples[sid]
        dets[sid] = infer_sim(model, sample, (cfg.seed, iteration, sid))
        gts[sid] = list(sample.annotations)
    return evaluate_run(dets, gts, pool.catalog, cfg.iou_threshold, cfg.ap_variant, cfg.include_difficult)


def select_checkpoint(state: RunState, model: ModelRef, iteration: int) -> tuple[str, SimModel, EvalReport]:
    """Evaluate every checkpoint the trainer produced and keep the best mAP (first on ties)."""
    best = None
    for artifact in model.artifacts:
        sim = load_sim_model(model, artifact)
        if len(sim.skills) != state.pool.catalog.size:
            raise ProtocolViolation(f"model {artifact!r} has {len(sim.skills)} classes, "
                                    f"pool has {state.pool.catalog.size}")
        report = evaluate_model(state, sim, iteration)
        if best is None or report.mAP > best[2].mAP:
            best = (artifact, sim, report)
    return best


def _train(state: RunState, manifest: PluginManifest, params: dict, version: DatasetVersion,
           task_root: Path, iteration: int) -> ModelRef:
    pool = state.pool
    task = prepare_task(task_root, "train", state.config.seed, iteration)
    labeled = [pool.samples[i] for i in version.labeled_ids]
    stage_train_inputs(task, pool.catalog, labeled, version, params)
    model = run_train_task(manifest, task, state.config.timeout)
    if model.version_id != version.version_id:
        raise ProtocolViolation(
            f"trainer reported version {model.version_id!r}, expected {version.version_id!r}"
        )
    return model


def _train_and_evaluate(state: RunState, version: DatasetVersion, k: int,
                        selected: list[str]) -> IterationRecord:
    cfg = state.config
    method, trainer, default = _manifests(cfg)
    idir = _iter_dir(state, k)
    model = _train(state, trainer, trainer.params, version, idir / "train", k)
    artifact, _, report = select_checkpoint(state, model, k)
    write_json_atomic(idir / "eval.json", report.to_dict())
    default_report = None
    if default is not None:
        dmodel = _train(state, default, default.params, version, idir / "train_default", k)
        _, _, default_report = select_checkpoint(state, dmodel, k)
        write_json_atomic(idir / "eval_default.json", default_report.to_dict())
    model_id = model.model_id if len(model.artifacts) == 1 else f"{model.model_id}/{artifact}"
    return IterationRecord(k, version.version_id, len(version.labeled_ids), selected, model_id,
                           artifact, report, default_report)


def _commit(state: RunState, record: IterationRecord, started: float) -> None:
    idir = _iter_dir(state, record.iteration)
    record.wall_time = time.perf_counter() - started
    write_json_atomic(idir / "timing.json", {"wall_time": record.wall_time})
    write_json_atomic(idir / "record.json", record.to_dict())
    state.records.append(record)
    stop, reason = should_stop(state)
    if stop:
        state.status, state.stop_reason = COMPLETED, reason
    _save_state(state)


# ---------------------------------------------------------------- public operations


def init_run(config: RunConfig, run_dir: Path | str) -> RunState:
    """Create version 0, train on it and record the baseline evaluation."""
    run_dir = Path(run_dir)
    problems = validate_plugins(config)
    if problems:
        run_dir.mkdir(parents=True, exist_ok=True)
        (run_dir / "failure.log").write_text("plugin validation failed:\n" + "\n".join(problems) + "\n",
                                             encoding="utf-8")
        raise ManifestError("plugin validation failed: " + "; ".join(problems))
    if (run_dir / "state.json").exists():
        raise ConfigError(f"{run_dir} already holds a run; use resume")
    if config.pool_sha256 is None:
        try:
            digest = file_sha256(Path(config.pool))
        except OSError as exc:
            raise HarnessIOError(f"cannot read pool {config.pool}: {exc}") from None
        config = RunConfig(**{**config.__dict__, "pool_sha256": digest})
    state = RunState(config, run_dir)
    pool = state.pool
    if config.n_initial > len(pool.train_ids):
        raise BudgetError(f"n_initial={config.n_initial} exceeds pool size {len(pool.train_ids)}")
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "config.json").write_text(dump_json(config.to_dict()), encoding="utf-8")

    started = time.perf_counter()
    v0 = create_initial_version(pool.train_ids, config.n_initial, config.seed, "v0")
    save_version(version_path(run_dir, 0), v0)
    _iter_dir(state, 0).mkdir(exist_ok=True)
    try:
        record = _train_and_evaluate(state, v0, 0, [])
    except HarnessError as exc:
        _fail(state, exc)
        raise
    _commit(state, record, started)
    return state


def _fail(state: RunState, exc: Exception) -> None:
    state.status = FAILED
    state.error = f"{type(exc).__name__}: {exc}"
    _save_state(state)


def should_stop(state: RunState) -> tuple[bool, str | None]:
    if not state.records:
        return False, None
    stop = state.config.stop
    if stop.max_iterations is not None and len(state.records) - 1 >= stop.max_iterations:
        return True, "max_iterations"
    last = state.records[-1]
    if stop.stop_size is not None and last.labeled_size >= stop.stop_size:
        return True, "stop_size"
    if last.labeled_size >= len(state.pool.train_ids):
        return True, "pool_exhausted"
    return False, None


def _candidate_detections(state: RunState, model: SimModel, ids: list[str], k: int, view: str) -> dict:
    pool, seed = state.pool, state.config.seed
    return {sid: infer_sim(model, pool.samples[sid], (seed, k, sid), view) for sid in ids}


def run_iteration(state: RunState) -> IterationRecord:
    if state.status != RUNNING:
        raise ConfigError(f"run is {state.status}")
    stop, reason = should_stop(state)
    if stop:
        raise BudgetError(f"stop criterion already met ({reason})")
    cfg, pool = state.config, state.pool
    k = state.cursor
    started = time.perf_counter()
    idir = _iter_dir(state, k)
    if idir.exists():
        shutil.rmtree(idir)
    idir.mkdir()
    try:
        prev = state.version(k - 1)
        prev_record = state.records[-1]
        method, _, _ = _manifests(cfg)
        prev_model_ref = _model_ref(state, k - 1)
        model = load_sim_model(prev_model_ref, prev_record.checkpoint)

        candidates = list(prev.unlabeled_ids)
        task = prepare_task(idir / "score", "score", cfg.seed, k)
        stage_score_inputs(
            task,
            pool.catalog,
            [pool.samples[i] for i in candidates],
            method.name,
            method.params,
            detections=(_candidate_detections(state, model, candidates, k, "orig")
                        if "detections" in method.requires else None),
            hflip_detections=(_candidate_detections(state, model, candidates, k, "hflip")
                              if "hflip_detections" in method.requires else None),
            model_dir=(prev_model_ref.artifact_dir(prev_record.checkpoint)
                       if "model" in method.requires else None),
        )
        scores = run_score_task(method, task, cfg.timeout)
        selected = select_top_k(scores, cfg.k_per_iteration)
        version = augment_version(prev, selected, f"v{k}")
        save_version(version_path(state.run_dir, k), version)
        record = _train_and_evaluate(state, version, k, selected)
    except HarnessError as exc:
        _fail(state, exc)
        raise
    _commit(state, record, started)
    log.info("%s iteration %d: labeled=%d mAP=%.4f", cfg.method_name, k, record.labeled_size,
             record.eval_report.mAP)
    return record


def _model_ref(state: RunState, k: int) -> ModelRef:
    from ..plugin.protocol import read_model_meta

    return read_model_meta(_iter_dir(state, k) / "train" / "out")


def run_to_completion(state: RunState) -> RunState:
    while state.status == RUNNING:
        run_iteration(state)
    return state


def execute(config: RunConfig, run_dir: Path | str) -> RunState:
    return run_to_completion(init_run(config, run_dir))


def resume(run_dir: Path | str) -> RunState:
    """Rebuild a run from its per-iteration records and continue where it stopped.

    Work from an iteration that never wrote ``record.json`` is discarded.
    """
    run_dir = Path(run_dir)
    try:
        config_data = json.loads((run_dir / "config.json").read_text(encoding="utf-8"))
        config = RunConfig.from_dict(config_data)
    except (OSError, json.JSONDecodeError, HarnessError) as exc:
        raise ResumeError(f"cannot read run config in {run_dir}: {exc}") from None

    found: dict[int, Path] = {}
    for d in run_dir.glob("iter_*"):
        suffix = d.name[len("iter_"):]
        if d.is_dir() and suffix.isdigit() and (d / "record.json").exists():
            found[int(suffix)] = d
    if not found:
        raise ResumeError("no committed record", iteration=0)
    last = max(found)
    records = []
    for k in range(last + 1):
        if k not in found:
            raise ResumeError("record missing while later records exist", iteration=k)
        try:
            record = IterationRecord.from_dict(json.loads((found[k] / "record.json").read_text(encoding="utf-8")))
            version = load_version(version_path(run_dir, k))
            timing = found[k] / "timing.json"
            if timing.exists():
                record.wall_time = json.loads(timing.read_text(encoding="utf-8"))["wall_time"]
        except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ResumeError(f"corrupted record: {exc}", iteration=k) from None
        if record.iteration != k or record.version_id != version.version_id \
                or record.labeled_size != len(version.labeled_ids):
            raise ResumeError("record does not match its version snapshot", iteration=k)
        records.append(record)

    state = RunState(config, run_dir, records)
    for stale in run_dir.glob("iter_*"):
        suffix = stale.name[len("iter_"):]
        if suffix.isdigit() and int(suffix) > last:
            shutil.rmtree(stale)
    for stale in run_dir.glob("version_*.json"):
        suffix = stale.stem[len("version_"):]
        if suffix.isdigit() and int(suffix) > last:
            stale.unlink()

    stop, reason = should_stop(state)
    if stop:
        state.status, state.stop_reason = COMPLETED, reason
    state_file = run_dir / "state.json"
    if not state_file.exists() or state_file.read_text(encoding="utf-8") != dump_json(state.to_dict()):
        _save_state(state)
    return state


def load_run(run_dir: Path | str) -> RunState:
    """Read-only view of a run directory (no cleanup, no state rewrite)."""
    run_dir = Path(run_dir)
    try:
        config = RunConfig.from_dict(json.loads((run_dir / "config.json").read_text(encoding="utf-8")))
        data = json.loads((run_dir / "state.json").read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise HarnessIOError(f"cannot read run {run_dir}: {exc}") from None
    records = [IterationRecord.from_dict(r) for r in data["records"]]
    return RunState(config, run_dir, records, data["status"], data.get("stop_reason"), data.get("error"))
