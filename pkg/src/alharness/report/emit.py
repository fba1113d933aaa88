"""Writing leaderboards and category tables to disk."""
from __future__ import annotations

import csv
import io
import json
import re
from pathlib import Path
from typing import Iterable, Sequence

from ..errors import ConfigMismatchError, HarnessIOError
from .leaderboard import CategoryTable, LeaderboardEntry
from .plots import PlotBackend, default_backend

FORMATS = ("markdown", "csv", "json", "plots")
_ALIASES = {"md": "markdown"}


def normalize_formats(formats: Iterable[str]) -> list[str]:
    out = []
    for f in formats:
        f = _ALIASES.get(f.strip().lower(), f.strip().lower())
        if f not in FORMATS:
            raise ValueError(f"unknown output format {f!r}; choose from {FORMATS}")
        if f not in out:
            out.append(f)
    return out


def render_markdown(entries: Sequence[LeaderboardEntry], tables: Sequence[CategoryTable] = ()) -> str:
    width = max(len(e.maps) for e in entries)
    header = ["Dataset", "Method", "baseline"] + [f"iter{i}" for i in range(1, width + 1)]
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    for e in entries:
        cells = e.cells(bold="**") + [""] * (width - len(e.maps))
        lines.append("| " + " | ".join([e.dataset, e.method] + cells) + " |")
    out = "\n".join(lines) + "\n"
    for table in tables:
        out += "\n" + render_category_markdown(table)
    return out


def render_category_markdown(table: CategoryTable) -> str:
    under = {(m, c, j) for m, c, j in table.underperforms}
    lines = [f"### Per-class AP: {table.dataset}", ""]
    header = ["Class", "Method"] + [f"iter{j}" for j in range(table.iterations)]
    lines += ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    for i, c in enumerate(table.classes):
        for m in table.methods:
            cells = []
            for j in range(table.iterations):
                cell = f"{100 * table.values[m][i][j]:.2f}"
                if (m, c, j) in under:
                    cell += "↓"
                cells.append(cell)
            lines.append("| " + " | ".join([c, m] + cells) + " |")
    if table.reference:
        lines += ["", f"↓ marks AP below `{table.reference}` for the same class and iteration."]
    return "\n".join(lines) + "\n"


def render_csv(entries: Sequence[LeaderboardEntry]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["dataset", "method", "iteration", "map", "delta", "winner"])
    for e in entries:
        writer.writerow([e.dataset, e.method, 0, f"{e.baseline:.2f}", "", 0])
        for j, value in enumerate(e.maps, start=1):
            cell = e.cells()[j]
            delta = re.match(r"\(([+-][0-9.]+)\)", cell).group(1)
            writer.writerow([e.dataset, e.method, j, f"{value:.2f}", delta, int(e.winners[j - 1])])
    return buf.getvalue()


def parse_csv(text: str) -> dict[tuple[str, str], list[float]]:
    """Inverse of :func:`render_csv` for the mAP values (2 dp)."""
    rows: dict[tuple[str, str], list[float]] = {}
    for rec in csv.DictReader(io.StringIO(text)):
        rows.setdefault((rec["dataset"], rec["method"]), []).append(float(rec["map"]))
    return rows


def render_category_csv(tables: Sequence[CategoryTable]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["dataset", "class", "method", "iteration", "ap", "below_reference"])
    for t in tables:
        under = set(t.underperforms)
        for i, c in enumerate(t.classes):
            for m in t.methods:
                for j in range(t.iterations):
                    writer.writerow([t.dataset, c, m, j, repr(t.values[m][i][j]), int((m, c, j) in under)])
    return buf.getvalue()


def render_json(entries: Sequence[LeaderboardEntry], tables: Sequence[CategoryTable] = ()) -> str:
    payload = {"leaderboard": [e.to_dict() for e in entries],
               "categories": [t.to_dict() for t in tables]}
    return json.dumps(payload, indent=2) + "\n"


def _plots(entries, tables, out_dir: Path, backend: PlotBackend) -> list[Path]:
    paths = []
    plot_dir = out_dir / "plots"
    plot_dir.mkdir(parents=True, exist_ok=True)
    datasets = list(dict.fromkeys(e.dataset for e in entries))
    for ds in datasets:
        group = [e for e in entries if e.dataset == ds]
        xs = list(range(max(len(e.maps) for e in group) + 1))
        path = plot_dir / f"map_{_slug(ds)}.png"
        backend.line_chart(path, f"mAP: {ds}", xs,
                           {e.method: [e.baseline] + e.maps for e in group}, "mAP (%)")
        paths.append(path)
    for t in tables:
        xs = list(range(t.iterations))
        for i, c in enumerate(t.classes):
            path = plot_dir / f"ap_{_slug(t.dataset)}_{_slug(c)}.png"
            backend.line_chart(path, f"AP {c}: {t.dataset}", xs,
                               {m: [100 * v for v in t.values[m][i]] for m in t.methods}, "AP (%)")
            paths.append(path)
    return paths


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", text)


def emit(entries: Sequence[LeaderboardEntry], tables: Sequence[CategoryTable], formats: Iterable[str],
         out_dir: Path, backend: PlotBackend | None = None) -> list[Path]:
    if not entries:
        raise ConfigMismatchError("nothing to compare: empty leaderboard")
    formats = normalize_formats(formats)
    out_dir = Path(out_dir)
    written = []
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        if "markdown" in formats:
            path = out_dir / "leaderboard.md"
            path.write_text(render_markdown(entries, tables), encoding="utf-8")
            written.append(path)
        if "csv" in formats:
            path = out_dir / "leaderboard.csv"
            path.write_text(render_csv(entries), encoding="utf-8")
            written.append(path)
            if tables:
                path = out_dir / "categories.csv"
                path.write_text(render_category_csv(tables), encoding="utf-8")
                written.append(path)
        if "json" in formats:
            path = out_dir / "leaderboard.json"
            path.write_text(render_json(entries, tables), encoding="utf-8")
            written.append(path)
        if "plots" in formats:
            written += _plots(entries, tables, out_dir, backend or default_backend())
    except OSError as exc:
        raise HarnessIOError(f"cannot write leaderboard output to {out_dir}: {exc}") from None
    return written
