import csv
import io

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from alharness.errors import ConfigMismatchError, HarnessIOError, KeyMismatchError
from alharness.eval import EvalReport
from alharness.orchestrator import IterationRecord, RunConfig, RunState, StopCriteria
from alharness.report.emit import emit, parse_csv, render_csv, render_markdown, normalize_formats
from alharness.report.leaderboard import (
    CategoryTable,
    build_category_table,
    build_leaderboard,
    format_delta,
    leaderboard_from_values,
)
import table2


class TestFormatDelta:
    @pytest.mark.parametrize("prev,curr,text", [
        (52.50, 54.79, "(+2.29) 54.79"),
        (52.50, 59.97, "(+7.47) 59.97"),
        (48.29, 55.93, "(+7.64) 55.93"),
        (50.00, 50.00, "(+0.00) 50.00"),
        (60.00, 58.50, "(-1.50) 58.50"),
        (60.0, 60.0 - 1e-9, "(+0.00) 60.00"),
    ])
    def test_examples(self, prev, curr, text):
        assert format_delta(prev, curr) == text

    def test_non_finite(self):
        with pytest.raises(ValueError):
            format_delta(float("nan"), 1.0)


class TestPublishedTable:
    entries = leaderboard_from_values(table2.VALUES)

    def test_consistent_cells(self):
        for e in self.entries:
            for j, cell in enumerate(e.cells()):
                if (e.dataset, e.method, j) in table2.INCONSISTENT_CELLS:
                    continue
                assert cell == table2.CELLS[(e.dataset, e.method)][j]

    def test_winner_is_bold_method(self):
        for e in self.entries:
            assert e.winners == [e.method == table2.BOLD_METHOD] * 4

    def test_markdown_voc07_rows(self):
        md = render_markdown(self.entries)
        for method in ("SSD+ALDD", "SSD+CALD", "SSD+RANDOM", "SSD+ENTROPY"):
            cells = table2.CELLS[("VOC07", method)]
            if method == table2.BOLD_METHOD:
                cells = [cells[0]] + [c.replace(" ", " **") + "**" for c in cells[1:]]
            assert "| VOC07 | " + method + " | " + " | ".join(cells) + " |" in md

    def test_inconsistent_cell_is_really_inconsistent(self):
        # the published delta cannot come from the published values at any rounding
        assert abs((62.24 - 60.65) - 1.80) > 0.01


class TestWinners:
    def test_ties_all_flagged(self):
        entries = leaderboard_from_values([("d", "a", [1, 5]), ("d", "b", [1, 5]), ("d", "c", [1, 4])])
        assert [e.winners for e in entries] == [[True], [True], [False]]

    def test_per_dataset(self):
        entries = leaderboard_from_values([("x", "a", [1, 2]), ("y", "b", [1, 1])])
        assert [e.winners for e in entries] == [[True], [True]]

    @pytest.mark.invariant
    @settings(max_examples=100)
    @given(st.lists(st.lists(st.integers(0, 5), min_size=3, max_size=3), min_size=1, max_size=6))
    def test_exactly_argmax(self, grid):
        entries = leaderboard_from_values([("d", f"m{i}", [0.0] + [float(v) for v in row])
                                           for i, row in enumerate(grid)])
        for j in range(3):
            best = max(row[j] for row in grid)
            assert [e.winners[j] for e in entries] == [row[j] == best for row in grid]


@pytest.mark.invariant
@settings(max_examples=300)
@given(st.lists(st.floats(0, 100, allow_nan=False), min_size=2, max_size=8))
def test_delta_sum_consistency(values):
    (entry,) = leaderboard_from_values([("d", "m", values)])
    cells = entry.cells()
    shown = [float(cells[0])] + [float(c.split(" ")[1]) for c in cells[1:]]
    deltas = [float(c.split(" ")[0].strip("()")) for c in cells[1:]]
    # each shown delta is the unrounded difference rounded to 2 dp
    for d, raw in zip(deltas, entry.deltas):
        assert abs(d - raw) <= 0.005 + 1e-9
    # deltas chain from baseline to final within rounding slack
    slack = 0.005 * (len(deltas) + 2) + 1e-9
    assert abs(shown[0] + sum(deltas) - shown[-1]) <= max(0.01, slack)


@pytest.mark.invariant
@settings(max_examples=100)
@given(st.lists(st.lists(st.floats(0, 100, allow_nan=False), min_size=2, max_size=5), min_size=1, max_size=5))
def test_csv_round_trip(rows):
    entries = leaderboard_from_values([("d", f"m{i}", r) for i, r in enumerate(rows)])
    parsed = parse_csv(render_csv(entries))
    for i, r in enumerate(rows):
        assert parsed[("d", f"m{i}")] == [float(f"{v:.2f}") for v in r]


# ---------------------------------------------------------------- run-based tables


def fake_run(tmp_path, method, aps_by_iter, classes=("a", "b", "c", "d", "e"), dataset="pool"):
    cfg = RunConfig(pool=str(tmp_path / f"{dataset}.jsonl"), method=f"builtin:{method}", n_initial=1,
                    k_per_iteration=1, stop=StopCriteria(max_iterations=len(aps_by_iter) - 1))
    records = []
    for k, aps in enumerate(aps_by_iter):
        per = dict(zip(classes, aps))
        rep = EvalReport(per, sum(per.values()) / len(per), {})
        records.append(IterationRecord(k, f"v{k}", k + 1, [], "m", "model", rep))
    return RunState(cfg, tmp_path / method, records, status="completed")


class TestCategoryTable:
    def test_shape(self, tmp_path):
        runs = [fake_run(tmp_path, m, [[0.1 * k + 0.01 * c for c in range(5)] for k in range(5)])
                for m in ("random", "entropy")]
        t = build_category_table(runs)
        assert t.shape() == (5, 5, 2)
        assert all(0.0 <= v <= 1.0 for m in t.methods for row in t.values[m] for v in row)

    def test_self_comparison(self, tmp_path):
        run = fake_run(tmp_path, "random", [[0.5] * 5] * 3)
        t = build_category_table([run])
        assert t.underperforms == []

    def test_single_cell(self, tmp_path):
        t = build_category_table([fake_run(tmp_path, "entropy", [[0.37]], classes=("a",))])
        assert t.shape() == (1, 1, 1) and t.values["entropy"] == [[0.37]]

    def test_flags_below_reference(self, tmp_path):
        ref = fake_run(tmp_path, "random", [[0.5, 0.5]], classes=("a", "b"))
        other = fake_run(tmp_path, "consistency", [[0.4, 0.6]], classes=("a", "b"))
        assert build_category_table([ref, other]).underperforms == [("consistency", "a", 0)]

    def test_missing_class(self, tmp_path):
        a = fake_run(tmp_path, "random", [[0.5, 0.5]], classes=("a", "b"))
        b = fake_run(tmp_path, "entropy", [[0.5]], classes=("a",))
        with pytest.raises(KeyMismatchError):
            build_category_table([a, b])

    def test_rendering_does_not_mutate(self, tmp_path):
        run = fake_run(tmp_path, "random", [[0.5] * 5] * 2)
        before = [r.eval_report.to_dict() for r in run.records]
        t = build_category_table([run])
        t.values["random"][0][0] = 9.0
        assert [r.eval_report.to_dict() for r in run.records] == before


class RecordingBackend:
    def __init__(self):
        self.calls = []

    def line_chart(self, path, title, xs, series, ylabel):
        self.calls.append((path.name, title))
        path.write_bytes(b"png")


class TestEmit:
    entries = leaderboard_from_values(table2.VALUES)

    def test_deterministic(self, tmp_path):
        emit(self.entries, [], ["md", "csv", "json"], tmp_path / "a")
        emit(leaderboard_from_values(table2.VALUES), [], ["markdown", "csv", "json"], tmp_path / "b")
        for name in ("leaderboard.md", "leaderboard.csv", "leaderboard.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_empty(self, tmp_path):
        with pytest.raises(ConfigMismatchError):
            emit([], [], ["md"], tmp_path)
        with pytest.raises(ConfigMismatchError):
            build_leaderboard([])

    def test_unwritable(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        with pytest.raises(HarnessIOError):
            emit(self.entries, [], ["md"], blocker / "out")

    def test_plot_backend_seam(self, tmp_path):
        table = build_category_table([fake_run(tmp_path, "random", [[0.5] * 5] * 2)])
        backend = RecordingBackend()
        written = emit(self.entries, [table], ["plots"], tmp_path / "out", backend)
        assert len(backend.calls) == 2 + 5
        assert all(p.exists() for p in written)

    def test_matplotlib_backend(self, tmp_path):
        pytest.importorskip("matplotlib")
        written = emit(self.entries[:4], [], ["plots"], tmp_path / "out")
        assert written and written[0].read_bytes()[:4] == b"\x89PNG"

    def test_unknown_format(self):
        with pytest.raises(ValueError):
            normalize_formats(["pdf"])

    def test_csv_long_format(self):
        rows = list(csv.DictReader(io.StringIO(render_csv(self.entries))))
        assert len(rows) == 8 * 5
        assert rows[1] == {"dataset": "VOC07", "method": "SSD+ALDD", "iteration": "1", "map": "54.79",
                           "delta": "+2.29", "winner": "0"}


def test_mixed_configs_rejected(small_pool, tmp_path):
    from alharness.orchestrator import execute

    base = dict(pool=str(small_pool), n_initial=100, stop=StopCriteria(max_iterations=1), seed=1,
                retrain_default=False)
    a = execute(RunConfig(method="builtin:random", k_per_iteration=25, **base), tmp_path / "a")
    b = execute(RunConfig(method="builtin:entropy", k_per_iteration=30, **base), tmp_path / "b")
    with pytest.raises(ConfigMismatchError):
        build_leaderboard([a, b])
    c = execute(RunConfig(method="builtin:entropy", k_per_iteration=25, **base), tmp_path / "c")
    entries = build_leaderboard([a, c])
    assert [e.method for e in entries] == ["random", "entropy"]
    assert entries[0].baseline == entries[1].baseline
