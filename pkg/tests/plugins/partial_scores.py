"""Strategy plugin that omits the last candidate from scores.tsv."""
import json
import sys
from pathlib import Path

task_file = Path(sys.argv[1])
task = json.loads(task_file.read_text())
in_dir = task_file.parent / task["in_dir"]
out_dir = task_file.parent / task["out_dir"]
lines = (in_dir / "candidates.jsonl").read_text().splitlines()[1:]
ids = [json.loads(line)["sample_id"] for line in lines]
with open(out_dir / "scores.tsv", "w") as fh:
    for sid in ids[:-1]:
        fh.write(f"{sid}\t0.5\n")
