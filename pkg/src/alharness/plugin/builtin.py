"""Entry point for the built-in plugins.

    python -m alharness.plugin.builtin strategy <name> <task.json>
    python -m alharness.plugin.builtin trainer sim <task.json>
"""
from __future__ import annotations

import json
import sys

from ..errors import EmptyTrainingSetError
from ..sim.env import MODEL_FORMAT, SimHyper, train_sim
from ..strategies.builtin import score_candidates
from .protocol import META_FILE, MODEL_DIR, SCORES_FILE, TaskDir, format_scores, read_envelope
from .staging import read_score_inputs, read_train_inputs


def run_strategy(name: str, task: TaskDir) -> None:
    inputs, params = read_score_inputs(task)
    scores = score_candidates(name, inputs, params)
    (task.out_dir / SCORES_FILE).write_text(format_scores(scores), encoding="utf-8")


def sim_model_meta(model, version_id: str) -> dict:
    return {
        "model_id": model.model_id,
        "version_id": version_id,
        "model_format": MODEL_FORMAT,
        "artifacts": [MODEL_DIR],
        "fitness": sum(model.skills) / len(model.skills),
    }


def run_sim_trainer(task: TaskDir) -> None:
    catalog, labeled, version, params = read_train_inputs(task)
    model = train_sim(labeled, catalog.size, SimHyper.from_dict(params.get("hyper")), version.version_id)
    model_dir = task.out_dir / MODEL_DIR
    model_dir.mkdir(parents=True, exist_ok=True)
    (model_dir / "sim_model.json").write_text(model.dumps(), encoding="utf-8")
    meta = sim_model_meta(model, version.version_id)
    (task.out_dir / META_FILE).write_text(json.dumps(meta, indent=1) + "\n", encoding="utf-8")


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 3:
        print(__doc__, file=sys.stderr)
        return 1
    kind, name, task_file = argv
    task = read_envelope(task_file)
    try:
        if kind == "strategy" and task.envelope.task == "score":
            run_strategy(name, task)
        elif kind == "trainer" and name == "sim" and task.envelope.task == "train":
            run_sim_trainer(task)
        else:
            print(f"unsupported plugin/task combination: {kind} {name} {task.envelope.task}", file=sys.stderr)
            return 1
    except EmptyTrainingSetError:
        print("empty training set", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
