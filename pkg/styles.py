"""
styles.py - All colors and stroke settings for the rendered SVG figures
"""

from dataclasses import dataclass
from typing import Tuple


@dataclass(frozen=True)
class Theme:
    """Color theme for network and city drawings."""

    background: str = "#0b1120"
    frame: str = "rgba(255,255,255,0.08)"
    street: str = "#93c5fd"
    boundary: str = "#f59e0b"
    cell_outline: str = "#475569"
    center: str = "#f43f5e"
    point: str = "#e6eef8"
    # one color per district, cycled
    districts: Tuple[str, ...] = (
        "#6366f1", "#22c55e", "#06b6d4", "#a855f7",
        "#eab308", "#ef4444", "#14b8a6", "#818cf8",
    )

    def district_color(self, index: int) -> str:
        return self.districts[index % len(self.districts)]


DARK_THEME = Theme()

PAPER_THEME = Theme(
    background="#ffffff",
    frame="#cbd5e1",
    street="#1e293b",
    boundary="#b45309",
    cell_outline="#94a3b8",
    center="#dc2626",
    point="#2563eb",
    districts=("#1e293b", "#1d4ed8", "#15803d", "#7e22ce", "#b91c1c", "#0f766e", "#a16207", "#334155"),
)

THEMES = {"dark": DARK_THEME, "paper": PAPER_THEME}

# ===== Strokes (pixels) =====
BASE_STROKE_PX = 4.0        # depth-0 stroke width w0
MIN_STROKE_PX = 0.25
BOUNDARY_STROKE_PX = 3.0
CELL_STROKE_PX = 0.75
POINT_RADIUS_PX = 1.5
CENTER_RADIUS_PX = 3.0
PX_DECIMALS = 3
