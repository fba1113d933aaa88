"""Trainer emitting two checkpoints: the real sim model and a crippled copy.

The crippled checkpoint is listed first and claims a higher fitness, so a
host that trusted self-reports or took the first artifact would pick it.
"""
import json
import sys
from pathlib import Path

from alharness.plugin.protocol import read_envelope
from alharness.plugin.staging import read_train_inputs
from alharness.sim.env import MODEL_FORMAT, SimHyper, SimModel, train_sim

task = read_envelope(Path(sys.argv[1]))
catalog, labeled, version, params = read_train_inputs(task)
good = train_sim(labeled, catalog.size, SimHyper.from_dict(params.get("hyper")), version.version_id)
bad = SimModel(tuple(s * 0.1 for s in good.skills), good.training_version, good.hyper)
for name, model in (("ckpt_a", bad), ("ckpt_b", good)):
    d = task.out_dir / name
    d.mkdir()
    (d / "sim_model.json").write_text(model.dumps())
meta = {
    "model_id": "multi-" + good.model_id,
    "version_id": version.version_id,
    "model_format": MODEL_FORMAT,
    "artifacts": ["ckpt_a", "ckpt_b"],
    "fitness": 1.0,
}
(task.out_dir / "model_meta.json").write_text(json.dumps(meta, indent=1) + "\n")
