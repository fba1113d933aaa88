import json
import sys

import pytest

from alharness.core import DatasetVersion, load_index
from alharness.errors import ManifestError, PluginFailure, PluginTimeout, ProtocolViolation
from alharness.plugin import (
    builtin_manifest,
    format_scores,
    load_manifest,
    parse_scores,
    prepare_task,
    run_score_task,
    run_train_task,
    validate_plugin,
)
from alharness.plugin.staging import stage_score_inputs, stage_train_inputs
from alharness.strategies import ScoredSample
from conftest import script_manifest
from helpers import score_both_ways


def write_manifest(tmp_path, **fields):
    data = {"name": "m", "kind": "strategy", "entry_command": [sys.executable, "-c", "pass"],
            "protocol_version": "1.0.0"}
    data.update(fields)
    path = tmp_path / "plugin.json"
    path.write_text(json.dumps(data))
    return path


class TestValidate:
    def test_well_formed(self, tmp_path):
        assert validate_plugin(load_manifest(write_manifest(tmp_path))) == []

    def test_unknown_kind(self, tmp_path):
        violations = validate_plugin(load_manifest(write_manifest(tmp_path, kind="oracle")))
        assert any(v.startswith("unknown kind") for v in violations)

    def test_incompatible_major(self, tmp_path):
        violations = validate_plugin(load_manifest(write_manifest(tmp_path, protocol_version="2.0.0")))
        assert any(v.startswith("incompatible protocol") for v in violations)

    def test_minor_bump_is_fine(self, tmp_path):
        assert validate_plugin(load_manifest(write_manifest(tmp_path, protocol_version="1.4.2"))) == []

    def test_unresolvable_command(self, tmp_path):
        violations = validate_plugin(load_manifest(write_manifest(tmp_path, entry_command=["no-such-binary-xyz"])))
        assert any("entry_command" in v for v in violations)

    def test_unreadable(self, tmp_path):
        with pytest.raises(ManifestError):
            load_manifest(tmp_path / "missing.json")
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        with pytest.raises(ManifestError):
            load_manifest(bad)

    def test_empty_entry_command(self, tmp_path):
        violations = validate_plugin(load_manifest(write_manifest(tmp_path, entry_command=[])))
        assert "entry_command is empty" in violations
        with pytest.raises(ManifestError):
            load_manifest(write_manifest(tmp_path, entry_command="python x.py"))

    def test_builtins_validate(self):
        for kind, name in [("strategy", "random"), ("strategy", "entropy"), ("strategy", "consistency"),
                           ("trainer", "sim")]:
            assert validate_plugin(builtin_manifest(kind, name), kind) == []


class TestScoresFile:
    def test_round_trip_exact(self):
        scores = [ScoredSample("a", 0.1), ScoredSample("b", 1 / 3), ScoredSample("c", 2.5e-17)]
        assert parse_scores(format_scores(scores), ["a", "b", "c"]) == scores

    @pytest.mark.parametrize("text", ["a\t0.1\nb\t0.2\n", "a\t0.1\nb\t0.2\nc\tnan\n", "a\t0.1\na\t0.1\nc\t1\n",
                                      "a\t0.1\nb\t0.2\nc\t0.3", "a 0.1\nb\t0.2\nc\t0.3\n",
                                      "a\t0.1\nb\t0.2\nz\t0.3\n"])
    def test_rejects(self, text):
        with pytest.raises(ProtocolViolation):
            parse_scores(text, ["a", "b", "c"])


@pytest.fixture()
def three_candidates(small_pool, tmp_path):
    catalog, samples = load_index(small_pool)
    task = prepare_task(tmp_path / "task", "score", 1, 1)
    stage_score_inputs(task, catalog, samples[:3], "x", {})
    return task


class TestScoreTask:
    def test_entropy_equivalence_three(self, small_pool, tmp_path):
        local, remote = score_both_ways("entropy", small_pool, tmp_path, n_candidates=3)
        assert len(remote) == 3 and remote == local

    def test_partial_scores(self, tmp_path, three_candidates):
        with pytest.raises(ProtocolViolation):
            run_score_task(load_manifest(script_manifest(tmp_path, "partial_scores.py")), three_candidates)

    def test_exit_code(self, tmp_path, three_candidates):
        path = script_manifest(tmp_path, "exit_code.py")
        data = json.loads(path.read_text())
        data["entry_command"].append("3")
        path.write_text(json.dumps(data))
        with pytest.raises(PluginFailure) as info:
            run_score_task(load_manifest(path), three_candidates)
        assert info.value.returncode == 3 and info.value.exit_code == 3
        assert "deliberate failure" in (three_candidates.root / "plugin.log").read_text()

    def test_timeout(self, tmp_path, three_candidates):
        with pytest.raises(PluginTimeout):
            run_score_task(load_manifest(script_manifest(tmp_path, "sleeper.py")), three_candidates, timeout=0.5)

    def test_out_dir_must_be_empty(self, three_candidates):
        (three_candidates.out_dir / "stale.tsv").write_text("x")
        with pytest.raises(ProtocolViolation):
            run_score_task(builtin_manifest("strategy", "random"), three_candidates)

    def test_wrong_envelope(self, tmp_path):
        task = prepare_task(tmp_path / "t", "train", 0, 0)
        with pytest.raises(ValueError):
            run_score_task(builtin_manifest("strategy", "random"), task)


def train_task(pool, root, n):
    catalog, samples = load_index(pool)
    labeled = samples[:n]
    task = prepare_task(root, "train", 4, 0)
    version = DatasetVersion("v0", tuple(s.sample_id for s in labeled),
                             tuple(s.sample_id for s in samples[n:200]))
    stage_train_inputs(task, catalog, labeled, version, {})
    return task


class TestTrainTask:
    def test_meta_present(self, small_pool, tmp_path):
        ref = run_train_task(builtin_manifest("trainer", "sim"), train_task(small_pool, tmp_path / "a", 100))
        assert ref.model_id.startswith("sim-") and ref.version_id == "v0"
        assert ref.artifacts and ref.artifact_dir(ref.artifacts[0]).is_dir()

    def test_empty_training_set(self, small_pool, tmp_path):
        with pytest.raises(PluginFailure) as info:
            run_train_task(builtin_manifest("trainer", "sim"), train_task(small_pool, tmp_path / "a", 0))
        assert "empty training set" in str(info.value)

    def test_replay_byte_identical(self, small_pool, tmp_path):
        metas = []
        for name in ("a", "b"):
            task = train_task(small_pool, tmp_path / name, 100)
            run_train_task(builtin_manifest("trainer", "sim"), task)
            metas.append((task.out_dir / "model_meta.json").read_bytes())
        assert metas[0] == metas[1]

    def test_missing_meta(self, small_pool, tmp_path):
        manifest = load_manifest(script_manifest(tmp_path, "no_meta_trainer.py", kind="trainer"))
        with pytest.raises(ProtocolViolation):
            run_train_task(manifest, train_task(small_pool, tmp_path / "a", 10))


@pytest.mark.parametrize("name", ["random", "entropy", "consistency"])
def test_builtin_equivalence_small(name, small_pool, tmp_path):
    local, remote = score_both_ways(name, small_pool, tmp_path, n_candidates=50)
    assert remote == local
