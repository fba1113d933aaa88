"""Host side of the subprocess plugin protocol.

A task directory holds ``task.json`` (the envelope), ``in/`` written by the
host, ``out/`` written by the plugin and ``plugin.log`` with the plugin's
stderr.  The plugin is started with the path to ``task.json`` as its only
extra argument and signals success by exiting 0.
"""
from __future__ import annotations

import json
import math
import os
import subprocess
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import alharness

from ..errors import HarnessIOError, PluginFailure, PluginTimeout, ProtocolViolation
from ..strategies.scoring import ScoredSample
from .manifest import PluginManifest

TASKS = ("score", "train")
DEFAULT_TIMEOUT = 600.0

TASK_FILE = "task.json"
LOG_FILE = "plugin.log"
SCORES_FILE = "scores.tsv"
META_FILE = "model_meta.json"
CANDIDATES_FILE = "candidates.jsonl"
LABELED_FILE = "labeled.jsonl"
VERSION_FILE = "version.json"
STRATEGY_FILE = "strategy.json"
TRAINER_FILE = "trainer.json"
DETECTIONS_FILE = "detections.jsonl"
HFLIP_DETECTIONS_FILE = "detections_hflip.jsonl"
MODEL_DIR = "model"


@dataclass(frozen=True)
class TaskEnvelope:
    """``in_dir``/``out_dir`` are stored relative to the task directory when possible."""

    task: str
    in_dir: str
    out_dir: str
    seed: int
    iteration: int

    def __post_init__(self) -> None:
        if self.task not in TASKS:
            raise ValueError(f"task must be one of {TASKS}")

    def to_dict(self) -> dict:
        return {"task": self.task, "in_dir": self.in_dir, "out_dir": self.out_dir,
                "seed": self.seed, "iteration": self.iteration,
                "protocol_version": alharness.PROTOCOL_VERSION}


@dataclass
class TaskDir:
    root: Path
    envelope: TaskEnvelope

    @property
    def task_file(self) -> Path:
        return self.root / TASK_FILE

    @property
    def in_dir(self) -> Path:
        return self.root / self.envelope.in_dir

    @property
    def out_dir(self) -> Path:
        return self.root / self.envelope.out_dir

    @property
    def log_file(self) -> Path:
        return self.root / LOG_FILE


def prepare_task(root: Path, task: str, seed: int, iteration: int) -> TaskDir:
    """Create ``root/{in,out}`` and write ``task.json``."""
    root = Path(root)
    envelope = TaskEnvelope(task, "in", "out", int(seed), int(iteration))
    try:
        (root / "in").mkdir(parents=True, exist_ok=True)
        (root / "out").mkdir(parents=True, exist_ok=True)
        (root / TASK_FILE).write_text(json.dumps(envelope.to_dict(), indent=1) + "\n", encoding="utf-8")
    except OSError as exc:
        raise HarnessIOError(f"cannot prepare task directory {root}: {exc}") from None
    return TaskDir(root, envelope)


def read_envelope(task_file: Path) -> TaskDir:
    task_file = Path(task_file)
    data = json.loads(task_file.read_text(encoding="utf-8"))
    envelope = TaskEnvelope(data["task"], data["in_dir"], data["out_dir"],
                            int(data["seed"]), int(data["iteration"]))
    return TaskDir(task_file.parent, envelope)


# ---------------------------------------------------------------- scores.tsv


def format_scores(scores: Sequence[ScoredSample]) -> str:
    lines = []
    for s in scores:
        if any(ch in s.sample_id for ch in "\t\n\r"):
            raise ValueError(f"sample id {s.sample_id!r} cannot be written to TSV")
        lines.append(f"{s.sample_id}\t{float(s.score)!r}\n")
    return "".join(lines)


def parse_scores(text: str, candidate_ids: Sequence[str]) -> list[ScoredSample]:
    """Validate a plugin's scores file; result follows ``candidate_ids`` order."""
    expected = set(candidate_ids)
    got: dict[str, float] = {}
    if text and not text.endswith("\n"):
        raise ProtocolViolation("scores file does not end with a newline (truncated?)")
    for lineno, line in enumerate(text.split("\n")[:-1], start=1):
        parts = line.split("\t")
        if len(parts) != 2:
            raise ProtocolViolation(f"scores line {lineno}: expected 'sample_id<TAB>score'")
        sid, raw = parts
        try:
            value = float(raw)
        except ValueError:
            raise ProtocolViolation(f"scores line {lineno}: score {raw!r} is not a number") from None
        if not math.isfinite(value):
            raise ProtocolViolation(f"scores line {lineno}: score must be finite")
        if sid not in expected:
            raise ProtocolViolation(f"scores line {lineno}: {sid!r} is not a candidate")
        if sid in got:
            raise ProtocolViolation(f"scores line {lineno}: duplicate id {sid!r}")
        got[sid] = value
    if len(got) != len(expected):
        missing = [i for i in candidate_ids if i not in got]
        raise ProtocolViolation(
            f"scores cover {len(got)} of {len(expected)} candidates (missing e.g. {missing[:3]})"
        )
    return [ScoredSample(sid, got[sid]) for sid in candidate_ids]


def candidate_ids_of(in_dir: Path) -> list[str]:
    ids = []
    path = Path(in_dir) / CANDIDATES_FILE
    with path.open(encoding="utf-8") as fh:
        next(fh)  # index header
        for line in fh:
            if line.strip():
                ids.append(str(json.loads(line)["sample_id"]))
    return ids


# ---------------------------------------------------------------- invocation


def _child_env() -> dict[str, str]:
    env = dict(os.environ)
    src = str(Path(alharness.__file__).resolve().parents[1])
    env["PYTHONPATH"] = src + (os.pathsep + env["PYTHONPATH"] if env.get("PYTHONPATH") else "")
    return env


def invoke(manifest: PluginManifest, task: TaskDir, timeout: float = DEFAULT_TIMEOUT) -> None:
    out_dir = task.out_dir
    if out_dir.exists() and any(out_dir.iterdir()):
        raise ProtocolViolation(f"out_dir {out_dir} is not empty at invocation")
    out_dir.mkdir(parents=True, exist_ok=True)
    argv = manifest.argv() + [str(task.task_file.resolve())]
    try:
        with task.log_file.open("wb") as log:
            proc = subprocess.run(argv, stdin=subprocess.DEVNULL, stdout=log, stderr=log,
                                  timeout=timeout, cwd=task.root, env=_child_env())
    except subprocess.TimeoutExpired:
        raise PluginTimeout(f"plugin {manifest.name!r} exceeded {timeout:g} s") from None
    except OSError as exc:
        raise PluginFailure(f"cannot start plugin {manifest.name!r}: {exc}") from None
    if proc.returncode != 0:
        stderr = task.log_file.read_text(encoding="utf-8", errors="replace")
        tail = stderr.strip().splitlines()[-1:] or [""]
        raise PluginFailure(
            f"plugin {manifest.name!r} exited with code {proc.returncode}: {tail[0]}",
            returncode=proc.returncode,
            stderr=stderr,
        )


def run_score_task(manifest: PluginManifest, task: TaskDir,
                   timeout: float = DEFAULT_TIMEOUT) -> list[ScoredSample]:
    if task.envelope.task != "score":
        raise ValueError("run_score_task needs a score envelope")
    candidates = candidate_ids_of(task.in_dir)
    invoke(manifest, task, timeout)
    path = task.out_dir / SCORES_FILE
    if not path.is_file():
        raise ProtocolViolation(f"plugin {manifest.name!r} wrote no {SCORES_FILE}")
    return parse_scores(path.read_text(encoding="utf-8"), candidates)


@dataclass(frozen=True)
class ModelRef:
    """A trained model as reported by a trainer plugin.

    ``fitness`` is the plugin's own claim and is never used for ranking.
    """

    out_dir: Path
    model_id: str
    version_id: str
    model_format: str
    artifacts: tuple[str, ...]
    fitness: float | None = None

    def artifact_dir(self, name: str) -> Path:
        return self.out_dir / name


def read_model_meta(out_dir: Path) -> ModelRef:
    path = Path(out_dir) / META_FILE
    if not path.is_file():
        raise ProtocolViolation(f"trainer wrote no {META_FILE}")
    try:
        meta = json.loads(path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ProtocolViolation(f"{META_FILE} is not valid JSON: {exc}") from None
    for key in ("model_id", "version_id"):
        if not isinstance(meta.get(key), str) or not meta[key]:
            raise ProtocolViolation(f"{META_FILE}: {key!r} must be a non-empty string")
    artifacts = meta.get("artifacts", [MODEL_DIR])
    if not isinstance(artifacts, list) or not artifacts:
        raise ProtocolViolation(f"{META_FILE}: 'artifacts' must be a non-empty list")
    for name in artifacts:
        if not isinstance(name, str) or Path(name).name != name or name in (".", ".."):
            raise ProtocolViolation(f"{META_FILE}: bad artifact name {name!r}")
        if not (Path(out_dir) / name).is_dir():
            raise ProtocolViolation(f"{META_FILE}: artifact directory {name!r} missing")
    fitness = meta.get("fitness")
    if fitness is not None and not isinstance(fitness, (int, float)):
        raise ProtocolViolation(f"{META_FILE}: 'fitness' must be a number")
    return ModelRef(Path(out_dir), meta["model_id"], meta["version_id"],
                    str(meta.get("model_format", "")), tuple(artifacts),
                    None if fitness is None else float(fitness))


def run_train_task(manifest: PluginManifest, task: TaskDir,
                   timeout: float = DEFAULT_TIMEOUT) -> ModelRef:
    if task.envelope.task != "train":
        raise ValueError("run_train_task needs a train envelope")
    if not (task.in_dir / LABELED_FILE).is_file():
        raise ProtocolViolation(f"train task has no {LABELED_FILE}")
    invoke(manifest, task, timeout)
    return read_model_meta(task.out_dir)
