"""
figures.py - Regenerate the reference figure set as SVG files
"""

import os
import logging
from dataclasses import dataclass
from typing import Callable, List, Optional

from tqdm import tqdm

from city import build_city, sample_city
from config import DEFAULT_WIDTH_PX, load_city_config
from manhattan import TruncationMode, build_network, sample_points
from render import render_svg

logger = logging.getLogger(__name__)

# ===== Figure presets =====
RECURSION_DEPTHS = (0, 1, 2, 3)
RECURSION_P = 0.5
SAMPLE_PS = (0.1, 0.3, 0.5, 0.8)
SAMPLE_COUNT = 1000
SAMPLE_DEPTH = 10
SAMPLE_DRAW_DEPTH = 4
CITY_DRAW_DEPTH = 4
CITY_POINTS = 1000
CITY_PRESETS = (
    ("fig3_voronoi_city", "voronoi_city"),
    ("fig4_isotropic_narrow", "isotropic_narrow"),
    ("fig4_isotropic_wide", "isotropic_wide"),
    ("fig5_river_sprawl", "river_sprawl"),
)


@dataclass(frozen=True)
class FigureTask:
    name: str
    make: Callable[[str], None]


def _recursion_task(depth: int) -> FigureTask:
    def make(path: str) -> None:
        render_svg(build_network(RECURSION_P, depth), path=path, width_px=DEFAULT_WIDTH_PX)
    return FigureTask(f"fig1_recursion_K{depth}", make)


def _samples_task(p: float, seed: int) -> FigureTask:
    def make(path: str) -> None:
        network = build_network(p, SAMPLE_DEPTH, TruncationMode.RENORMALIZED)
        points = sample_points(network, SAMPLE_COUNT, seed)
        render_svg(network, points, path=path, width_px=DEFAULT_WIDTH_PX, max_draw_depth=SAMPLE_DRAW_DEPTH)
    return FigureTask(f"fig2_samples_p{p:g}", make)


def _city_task(name: str, preset: str, seed: Optional[int]) -> FigureTask:
    def make(path: str) -> None:
        city = build_city(load_city_config(preset))
        points = sample_city(city, CITY_POINTS, seed)
        render_svg(city, points, path=path, width_px=DEFAULT_WIDTH_PX, max_draw_depth=CITY_DRAW_DEPTH)
    return FigureTask(name, make)


def figure_tasks(seed: Optional[int] = None) -> List[FigureTask]:
    """Without `seed`, grid samples use seed 0 and each city its preset's master seed."""
    tasks = [_recursion_task(k) for k in RECURSION_DEPTHS]
    tasks += [_samples_task(p, 0 if seed is None else seed) for p in SAMPLE_PS]
    tasks += [_city_task(name, preset, seed) for name, preset in CITY_PRESETS]
    return tasks


def generate_figures(outdir: str, seed: Optional[int] = None, progress: bool = True) -> List[str]:
    """Write every figure into `outdir`; returns the written paths in task order."""
    os.makedirs(outdir, exist_ok=True)
    paths = []
    for task in tqdm(figure_tasks(seed), desc="figures", disable=not progress):
        path = os.path.join(outdir, f"{task.name}.svg")
        task.make(path)
        paths.append(path)
    logger.info("Generated %d figures in %s", len(paths), outdir)
    return paths
