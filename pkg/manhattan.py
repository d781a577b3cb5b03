"""
manhattan.py - Recursive Manhattan hyperfractal grid and exact sampling from its measure

Level-l lines sit at odd multiples of 2^-(l+1) and are cut into 2^l segments
of depth l. Coordinates are kept as integers (odd numerator b over 2^(k+1) for
the carrying line, span index j over 2^k along it) and only turned into floats
on demand.
"""

import logging
from enum import Enum
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from config import (
    DEFAULT_MAX_DEPTH_BUDGET, DEFAULT_N_JOBS, DEFAULT_SEGMENT_BUDGET,
    STREAM_SAMPLES, chunk_bounds, make_rng,
)
from errors import ParameterError, SizeBudgetError

logger = logging.getLogger(__name__)


class Axis(str, Enum):
    VERTICAL = "vertical"
    HORIZONTAL = "horizontal"


class TruncationMode(str, Enum):
    RENORMALIZED = "renormalized"
    RAW = "raw"


AXES = (Axis.VERTICAL, Axis.HORIZONTAL)


# -------------------------
# Closed-form per-depth quantities
# -------------------------

def check_p(p: float) -> float:
    p = float(p)
    if not 0.0 < p < 1.0:
        raise ParameterError(f"p must lie in (0,1), got {p}")
    return p


def check_depth(max_depth: int, budget: int = DEFAULT_MAX_DEPTH_BUDGET) -> int:
    if isinstance(max_depth, bool) or int(max_depth) != max_depth or max_depth < 0:
        raise ParameterError(f"max depth must be a nonnegative integer, got {max_depth!r}")
    max_depth = int(max_depth)
    if max_depth > budget:
        raise SizeBudgetError(
            f"depth {max_depth} exceeds the configured budget of {budget} "
            f"({segment_count_total(max_depth)} segments requested)"
        )
    return max_depth


def segment_count(depth: int) -> int:
    return 2 * 4 ** depth


def segment_count_total(max_depth: int) -> int:
    return 2 * (4 ** (max_depth + 1) - 1) // 3


def raw_segment_mass(p: float, depth: int) -> float:
    """(p/2)(q/4)^k: mass of one depth-k segment of the infinite grid."""
    return (p / 2.0) * ((1.0 - p) / 4.0) ** depth


def raw_total_mass(p: float, max_depth: int) -> float:
    return 1.0 - (1.0 - p) ** (max_depth + 1)


def depth_probabilities(p: float, max_depth: int, mode: TruncationMode) -> np.ndarray:
    """
    P(depth = k) for k = 0..K.

    Renormalized: p q^k / (1 - q^(K+1)). Raw: the residual q^(K+1) is folded
    into depth K, so P(K) = q^K.
    """
    mode = TruncationMode(mode)
    q = 1.0 - p
    k = np.arange(max_depth + 1)
    probs = p * q ** k
    if mode is TruncationMode.RENORMALIZED:
        probs = probs / raw_total_mass(p, max_depth)
    else:
        probs[-1] = q ** max_depth
    return probs / probs.sum()


def sample_depth(p: float, max_depth: int, mode: TruncationMode, rng: np.random.Generator) -> int:
    """Draw one segment depth from the truncated geometric law."""
    if max_depth == 0:
        return 0
    return int(rng.choice(max_depth + 1, p=depth_probabilities(p, max_depth, mode)))


def sample_depths(p: float, max_depth: int, mode: TruncationMode,
                  rng: np.random.Generator, size: int) -> np.ndarray:
    if max_depth == 0:
        return np.zeros(size, dtype=np.int64)
    return rng.choice(max_depth + 1, size=size, p=depth_probabilities(p, max_depth, mode))


# -------------------------
# Domain types
# -------------------------

@dataclass(frozen=True)
class GridSegment:
    """One depth-k street segment; line at b/2^(k+1), span [j, j+1]/2^k."""

    axis: Axis
    depth: int
    line_num: int
    span_index: int
    mass: float

    @property
    def level(self) -> int:
        return self.depth

    @property
    def line_offset(self) -> float:
        return self.line_num / 2.0 ** (self.depth + 1)

    @property
    def span_start(self) -> float:
        return self.span_index / 2.0 ** self.depth

    @property
    def span_end(self) -> float:
        return (self.span_index + 1) / 2.0 ** self.depth

    @property
    def length(self) -> float:
        return 2.0 ** -self.depth

    @property
    def linear_density(self) -> float:
        return self.mass / self.length

    def endpoints(self) -> Tuple[Tuple[float, float], Tuple[float, float]]:
        if self.axis is Axis.VERTICAL:
            return (self.line_offset, self.span_start), (self.line_offset, self.span_end)
        return (self.span_start, self.line_offset), (self.span_end, self.line_offset)


@dataclass(frozen=True)
class SamplePoint:
    x: float
    y: float
    depth: int
    axis: Axis


@dataclass(frozen=True, eq=False)
class ManhattanNetwork:
    """
    Truncated grid of depths 0..K with its (raw or renormalized) measure.

    Segment arrays are ordered by depth, then axis, then line, then span, so
    each grid line is a contiguous run of 2^k segments.
    """

    p: float
    max_depth: int
    mode: TruncationMode
    axis_codes: np.ndarray = field(repr=False)
    depths: np.ndarray = field(repr=False)
    line_nums: np.ndarray = field(repr=False)
    span_indices: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return int(self.depths.shape[0])

    @property
    def q(self) -> float:
        return 1.0 - self.p

    @property
    def raw_total_mass(self) -> float:
        return raw_total_mass(self.p, self.max_depth)

    def mass_by_depth(self) -> np.ndarray:
        """Stored per-segment mass for each depth 0..K."""
        k = np.arange(self.max_depth + 1)
        masses = (self.p / 2.0) * (self.q / 4.0) ** k
        if self.mode is TruncationMode.RENORMALIZED:
            masses = masses / self.raw_total_mass
        return masses

    @property
    def masses(self) -> np.ndarray:
        return self.mass_by_depth()[self.depths]

    @property
    def total_mass(self) -> float:
        counts = np.array([segment_count(k) for k in range(self.max_depth + 1)], dtype=float)
        return float(np.dot(counts, self.mass_by_depth()))

    @property
    def lengths(self) -> np.ndarray:
        return 2.0 ** -self.depths.astype(float)

    def endpoints(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Float endpoint arrays (x0, y0, x1, y1)."""
        depth = self.depths.astype(float)
        offset = self.line_nums / 2.0 ** (depth + 1)
        start = self.span_indices / 2.0 ** depth
        end = (self.span_indices + 1) / 2.0 ** depth
        vertical = self.axis_codes == 0
        x0 = np.where(vertical, offset, start)
        y0 = np.where(vertical, start, offset)
        x1 = np.where(vertical, offset, end)
        y1 = np.where(vertical, end, offset)
        return x0, y0, x1, y1

    def segment(self, i: int) -> GridSegment:
        depth = int(self.depths[i])
        return GridSegment(
            axis=AXES[int(self.axis_codes[i])],
            depth=depth,
            line_num=int(self.line_nums[i]),
            span_index=int(self.span_indices[i]),
            mass=float(self.mass_by_depth()[depth]),
        )

    @property
    def segments(self) -> List[GridSegment]:
        return list(self.iter_segments())

    def iter_segments(self) -> Iterator[GridSegment]:
        table = self.mass_by_depth()
        for axis, depth, b, j in zip(self.axis_codes, self.depths, self.line_nums, self.span_indices):
            yield GridSegment(AXES[int(axis)], int(depth), int(b), int(j), float(table[depth]))

    def iter_lines(self) -> Iterator[Tuple[Axis, int, int, slice]]:
        """(axis, level, b, slice into the segment arrays) for every grid line."""
        start = 0
        for level in range(self.max_depth + 1):
            run = 2 ** level
            for axis in AXES:
                for i in range(run):
                    yield axis, level, 2 * i + 1, slice(start, start + run)
                    start += run


# -------------------------
# Construction
# -------------------------

def build_network(p: float, max_depth: int,
                  mode: TruncationMode = TruncationMode.RENORMALIZED,
                  depth_budget: int = DEFAULT_MAX_DEPTH_BUDGET,
                  segment_budget: int = DEFAULT_SEGMENT_BUDGET) -> ManhattanNetwork:
    """
    Enumerate every segment of depth 0..K of the Manhattan grid.

    Args:
        p: mass share kept by the two depth-0 lines, in (0, 1)
        max_depth: truncation depth K
        mode: how the residual mass beyond depth K is handled
        depth_budget: largest accepted K
        segment_budget: largest accepted total segment count

    Returns:
        ManhattanNetwork with per-segment depth, endpoints and mass

    Raises:
        ParameterError: p outside (0, 1)
        SizeBudgetError: K or the segment count exceed their budgets
    """
    p = check_p(p)
    max_depth = check_depth(max_depth, depth_budget)
    mode = TruncationMode(mode)
    total = segment_count_total(max_depth)
    if total > segment_budget:
        raise SizeBudgetError(f"{total} segments exceed the segment budget of {segment_budget}")

    axis_parts, depth_parts, line_parts, span_parts = [], [], [], []
    for k in range(max_depth + 1):
        run = 2 ** k
        axis, b, j = np.meshgrid(
            np.arange(2, dtype=np.int8),
            2 * np.arange(run, dtype=np.int32) + 1,
            np.arange(run, dtype=np.int32),
            indexing='ij',
        )
        axis_parts.append(axis.ravel())
        line_parts.append(b.ravel())
        span_parts.append(j.ravel())
        depth_parts.append(np.full(axis.size, k, dtype=np.int8))

    arrays = [np.concatenate(parts) for parts in (axis_parts, depth_parts, line_parts, span_parts)]
    for arr in arrays:
        arr.setflags(write=False)

    network = ManhattanNetwork(p, max_depth, mode, *arrays)
    logger.info(
        "Built Manhattan grid p=%.4g K=%d (%s): %d segments, raw mass %.12g",
        p, max_depth, mode.value, len(network), network.raw_total_mass,
    )
    return network


def segment_table(network: ManhattanNetwork) -> pd.DataFrame:
    """One row per depth: count, per-segment length, mass and linear density."""
    k = np.arange(network.max_depth + 1)
    masses = network.mass_by_depth()
    lengths = 2.0 ** -k.astype(float)
    return pd.DataFrame({
        'depth': k,
        'count': [segment_count(d) for d in k],
        'length': lengths,
        'mass': masses,
        'linear_density': masses / lengths,
    })


# -------------------------
# Sampling
# -------------------------

def _sample_chunk(p: float, max_depth: int, mode: TruncationMode,
                  seed: int, chunk_index: int, size: int) -> Tuple[np.ndarray, ...]:
    rng = make_rng(seed, STREAM_SAMPLES, chunk_index)
    depth = sample_depths(p, max_depth, mode, rng, size)
    axis = rng.integers(0, 2, size=size)
    run = np.left_shift(1, depth)
    b = 2 * rng.integers(0, run) + 1
    j = rng.integers(0, run)
    t = rng.random(size)
    fixed = b / (2.0 * run)
    along = (j + t) / run
    vertical = axis == 0
    x = np.where(vertical, fixed, along)
    y = np.where(vertical, along, fixed)
    return x, y, depth, axis


def sample_arrays(network: ManhattanNetwork, n: int, seed: int,
                  n_jobs: int = DEFAULT_N_JOBS) -> Tuple[np.ndarray, ...]:
    """
    Vectorized sampler behind sample_points: (x, y, depth, axis_code) arrays.

    Chunk c of the index range draws from stream (STREAM_SAMPLES, c), so the
    output does not depend on n_jobs.
    """
    if n < 0:
        raise ParameterError(f"sample count must be >= 0, got {n}")
    bounds = chunk_bounds(n)
    if not bounds:
        empty = np.empty(0)
        return empty, empty, np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    parts = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_sample_chunk)(network.p, network.max_depth, network.mode, seed, c, stop - start)
        for c, (start, stop) in enumerate(bounds)
    )
    return tuple(np.concatenate(cols) for cols in zip(*parts))


def sample_points(network: ManhattanNetwork, n: int, seed: int,
                  n_jobs: int = DEFAULT_N_JOBS) -> List[SamplePoint]:
    """Draw n i.i.d. points: depth, then a uniform segment of that depth, then a uniform position."""
    x, y, depth, axis = sample_arrays(network, n, seed, n_jobs)
    logger.debug("Sampled %d points from grid p=%.4g K=%d", n, network.p, network.max_depth)
    return [
        SamplePoint(float(a), float(b), int(d), AXES[int(c)])
        for a, b, d, c in zip(x, y, depth, axis)
    ]


# -------------------------
# Membership
# -------------------------

def carrying_level(value: float, max_depth: int, tol: float = 1e-12) -> Optional[int]:
    """Level l <= K of the grid line at coordinate `value`, or None if none passes there."""
    scale = 2.0 ** (max_depth + 1)
    m = round(value * scale)
    if abs(value * scale - m) > tol * scale or not 0 < m < scale:
        return None
    # m = odd * 2^(K - l)
    trailing = (m & -m).bit_length() - 1
    return max_depth - trailing


def is_on_grid(point: SamplePoint, max_depth: int, tol: float = 1e-12) -> bool:
    """True when the point lies on a segment of depth point.depth of a depth-K grid."""
    if not (-tol <= point.x <= 1 + tol and -tol <= point.y <= 1 + tol):
        return False
    fixed = point.x if point.axis is Axis.VERTICAL else point.y
    return carrying_level(fixed, max_depth, tol) == point.depth


def depth_frequencies(depths: np.ndarray, max_depth: int) -> np.ndarray:
    """Empirical fraction of samples at each depth 0..K."""
    return np.bincount(np.asarray(depths, dtype=np.int64), minlength=max_depth + 1) / max(len(depths), 1)


__all__ = [
    "Axis", "TruncationMode", "GridSegment", "SamplePoint", "ManhattanNetwork",
    "build_network", "segment_table", "sample_depth", "sample_depths", "sample_points",
    "sample_arrays", "depth_probabilities", "depth_frequencies", "is_on_grid", "carrying_level",
    "raw_segment_mass", "raw_total_mass", "segment_count", "segment_count_total",
]
