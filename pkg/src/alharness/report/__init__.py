from .emit import emit, parse_csv, render_csv, render_json, render_markdown
from .leaderboard import (
    CategoryTable,
    LeaderboardEntry,
    build_category_table,
    build_leaderboard,
    flag_winners,
    format_delta,
    leaderboard_from_values,
)
from .plots import MatplotlibBackend, PlotBackend

__all__ = [
    "CategoryTable",
    "LeaderboardEntry",
    "MatplotlibBackend",
    "PlotBackend",
    "build_category_table",
    "build_leaderboard",
    "emit",
    "flag_winners",
    "format_delta",
    "leaderboard_from_values",
    "parse_csv",
    "render_csv",
    "render_json",
    "render_markdown",
]
