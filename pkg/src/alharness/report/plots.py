"""Plot rendering behind a small backend interface."""
from __future__ import annotations

from pathlib import Path
from typing import Mapping, Protocol, Sequence


class PlotBackend(Protocol):
    def line_chart(self, path: Path, title: str, xs: Sequence[int],
                   series: Mapping[str, Sequence[float]], ylabel: str) -> None: ...


class MatplotlibBackend:
    def __init__(self) -> None:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        self._plt = plt

    def line_chart(self, path, title, xs, series, ylabel):
        plt = self._plt
        fig, ax = plt.subplots(figsize=(6, 4))
        for label, ys in series.items():
            ax.plot(list(xs), list(ys), marker="o", label=label)
        ax.set_title(title)
        ax.set_xlabel("iteration")
        ax.set_ylabel(ylabel)
        ax.set_xticks(list(xs))
        ax.grid(alpha=0.3)
        ax.legend()
        fig.tight_layout()
        fig.savefig(path, dpi=100)
        plt.close(fig)


def default_backend() -> PlotBackend:
    return MatplotlibBackend()
