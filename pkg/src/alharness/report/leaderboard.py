"""Leaderboard rows with per-iteration deltas, and per-category AP tables."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from ..errors import ConfigMismatchError, KeyMismatchError


def format_delta(prev: float, curr: float) -> str:
    """``"(+2.29) 54.79"``: change from ``prev`` then the new value, both at 2 dp.

    The delta is taken on unrounded inputs.  A delta that rounds to zero is
    shown as ``+0.00``.
    """
    if not (math.isfinite(prev) and math.isfinite(curr)):
        raise ValueError("format_delta needs finite inputs")
    delta = curr - prev
    magnitude = f"{abs(delta):.2f}"
    sign = "-" if delta < 0 and magnitude != "0.00" else "+"
    return f"({sign}{magnitude}) {curr:.2f}"


@dataclass
class LeaderboardEntry:
    dataset: str
    method: str
    baseline: float
    maps: list[float]
    winners: list[bool] = field(default_factory=list)

    @property
    def deltas(self) -> list[float]:
        prev = [self.baseline] + self.maps[:-1]
        return [c - p for p, c in zip(prev, self.maps)]

    @property
    def final(self) -> float:
        return self.maps[-1] if self.maps else self.baseline

    def cells(self, bold: str = "") -> list[str]:
        """Baseline cell then one ``(delta) value`` cell per iteration."""
        out = [f"{self.baseline:.2f}"]
        prev = self.baseline
        for i, value in enumerate(self.maps):
            cell = format_delta(prev, value)
            if bold and i < len(self.winners) and self.winners[i]:
                head, tail = cell.split(" ")
                cell = f"{head} {bold}{tail}{bold}"
            out.append(cell)
            prev = value
        return out

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "method": self.method,
            "baseline": self.baseline,
            "maps": list(self.maps),
            "deltas": self.deltas,
            "winners": list(self.winners),
            "cells": self.cells(),
        }


def flag_winners(entries: Sequence[LeaderboardEntry]) -> None:
    """Mark, per dataset and iteration column, every entry equal to the column max."""
    by_dataset: dict[str, list[LeaderboardEntry]] = {}
    for e in entries:
        by_dataset.setdefault(e.dataset, []).append(e)
    for group in by_dataset.values():
        width = max(len(e.maps) for e in group)
        for e in group:
            e.winners = [False] * len(e.maps)
        for j in range(width):
            column = [e for e in group if j < len(e.maps)]
            best = max(e.maps[j] for e in column)
            for e in column:
                e.winners[j] = e.maps[j] == best


def leaderboard_from_values(rows: Sequence[tuple[str, str, Sequence[float]]]) -> list[LeaderboardEntry]:
    """Entries from ``(dataset, method, [baseline, iter1, ...])`` rows, values already in display units."""
    seen = set()
    entries = []
    for dataset, method, values in rows:
        if (dataset, method) in seen:
            raise ConfigMismatchError(f"duplicate leaderboard row {dataset}/{method}")
        seen.add((dataset, method))
        if not values:
            raise ConfigMismatchError(f"{dataset}/{method} has no values")
        entries.append(LeaderboardEntry(dataset, method, float(values[0]), [float(v) for v in values[1:]]))
    flag_winners(entries)
    return entries


def _check_comparable(runs) -> None:
    if not runs:
        raise ConfigMismatchError("no runs to compare")
    by_dataset: dict[str, list] = {}
    for run in runs:
        if run.status != "completed":
            raise ConfigMismatchError(f"run {run.run_dir} is {run.status}, not completed")
        by_dataset.setdefault(run.config.dataset_name, []).append(run)
    for dataset, group in by_dataset.items():
        ref = group[0]
        ref_cfg = ref.config.comparable()
        ref_v0 = ref.version(0).labeled_ids
        for run in group[1:]:
            cfg = run.config.comparable()
            diff = sorted(k for k in ref_cfg if ref_cfg[k] != cfg.get(k))
            if diff:
                raise ConfigMismatchError(
                    f"{dataset}: {run.config.method_name} differs from {ref.config.method_name} in {diff}"
                )
            if run.version(0).labeled_ids != ref_v0:
                raise ConfigMismatchError(
                    f"{dataset}: {run.config.method_name} starts from a different initial set"
                )


def build_leaderboard(runs, scale: float = 100.0, default_eval: bool = False) -> list[LeaderboardEntry]:
    """One entry per (dataset, method); mAP shown in percent by default.

    With ``default_eval`` the reports from the default-trainer retraining are
    used where present.
    """
    _check_comparable(runs)
    rows = []
    for run in runs:
        values = []
        for r in run.records:
            report = r.default_eval if default_eval and r.default_eval is not None else r.eval_report
            values.append(report.mAP * scale)
        rows.append((run.config.dataset_name, run.config.method_name, values))
    return leaderboard_from_values(rows)


@dataclass
class CategoryTable:
    """AP per method, class and iteration (``values[method][class][iteration]``)."""

    dataset: str
    methods: list[str]
    classes: list[str]
    iterations: int
    values: dict[str, list[list[float]]]
    reference: str | None = None
    # (method, class, iteration) where the method is below the reference
    underperforms: list[tuple[str, str, int]] = field(default_factory=list)

    def shape(self) -> tuple[int, int, int]:
        return (len(self.classes), self.iterations, len(self.methods))

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "methods": list(self.methods),
            "classes": list(self.classes),
            "iterations": self.iterations,
            "values": self.values,
            "reference": self.reference,
            "underperforms": [list(u) for u in self.underperforms],
        }


def build_category_table(runs, reference: str | None = "random") -> CategoryTable:
    """Per-class AP matrix for runs on one dataset.

    When a run named ``reference`` is present, every other method's cells
    that fall below it are listed in ``underperforms``.
    """
    if not runs:
        raise ConfigMismatchError("no runs to tabulate")
    datasets = {r.config.dataset_name for r in runs}
    if len(datasets) != 1:
        raise ConfigMismatchError(f"category table needs a single dataset, got {sorted(datasets)}")
    classes = list(runs[0].records[0].eval_report.per_class_ap)
    iterations = len(runs[0].records)
    values: dict[str, list[list[float]]] = {}
    for run in runs:
        name = run.config.method_name
        if len(run.records) != iterations:
            raise ConfigMismatchError(f"{name} has {len(run.records)} records, expected {iterations}")
        matrix = [[0.0] * iterations for _ in classes]
        for j, record in enumerate(run.records):
            ap = record.eval_report.per_class_ap
            if set(ap) != set(classes):
                raise KeyMismatchError(
                    f"{name} iteration {j}: classes {sorted(ap)} differ from {sorted(classes)}"
                )
            for i, c in enumerate(classes):
                matrix[i][j] = ap[c]
        values[name] = matrix
    under = []
    if reference is not None and reference in values:
        ref = values[reference]
        for name, matrix in values.items():
            if name == reference:
                continue
            for i, c in enumerate(classes):
                for j in range(iterations):
                    if matrix[i][j] < ref[i][j]:
                        under.append((name, c, j))
    return CategoryTable(datasets.pop(), list(values), classes, iterations, values,
                         reference if reference in values else None, under)
