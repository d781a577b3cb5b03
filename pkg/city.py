"""
city.py - Fractal city assembly: Voronoi districts carrying clipped Manhattan
hyperfractals, boundary roads of weight p0, and sampling from the composite measure
"""

import math
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from config import (
    DEFAULT_MAX_REJECTS, DEFAULT_N_JOBS, DEFAULT_SKIP_HEAD, STREAM_SAMPLES,
    check_seed, chunk_bounds, make_rng,
)
from errors import ConfigError, FitError, GeometryError, ParameterError
from estimator import StreetRecord, estimate_dimension
from geometry import (
    ConvexPolygon, CovarianceSpec, Point2, VoronoiDiagram, VoronoiEdge,
    clip_segment_arrays, sample_centers, voronoi_partition,
)
from manhattan import TruncationMode, build_network, check_depth
from measure import manhattan_dimension

logger = logging.getLogger(__name__)

BOUNDARY = "boundary"


# -------------------------
# Configuration
# -------------------------

@dataclass(frozen=True)
class GaussianCenters:
    """Centers drawn from N(mean, cov) restricted to the unit square."""

    mean: Point2
    cov: CovarianceSpec
    seed: int
    max_rejects: int = DEFAULT_MAX_REJECTS


CenterSource = Union[Sequence[Point2], GaussianCenters]


@dataclass(frozen=True)
class CityConfig:
    n: int
    p0: float
    center_source: CenterSource
    lambdas: Sequence[float]
    ps: Sequence[float]
    max_depth: int
    seed: int

    def __post_init__(self):
        if isinstance(self.n, bool) or not isinstance(self.n, int) or self.n < 1:
            raise ConfigError(f"district count n must be an integer >= 1, got {self.n!r}")
        if not 0.0 <= self.p0 < 1.0:
            raise ConfigError(f"boundary weight p0 must lie in [0,1), got {self.p0}")
        if self.n == 1 and self.p0 > 0.0:
            raise ConfigError("a single district has no boundary roads; p0 must be 0")
        object.__setattr__(self, "lambdas", tuple(float(v) for v in self.lambdas))
        object.__setattr__(self, "ps", tuple(float(v) for v in self.ps))
        if len(self.lambdas) != self.n or len(self.ps) != self.n:
            raise ConfigError(f"lambdas and ps must both have n={self.n} entries")
        if any(v <= 0.0 for v in self.lambdas):
            raise ConfigError(f"district weights must be > 0, got {list(self.lambdas)}")
        if any(not 0.0 < v < 1.0 for v in self.ps):
            raise ConfigError(f"district parameters p_i must lie in (0,1), got {list(self.ps)}")
        if not isinstance(self.center_source, GaussianCenters):
            centers = tuple(self.center_source)
            if len(centers) != self.n:
                raise ConfigError(f"expected {self.n} explicit centers, got {len(centers)}")
            object.__setattr__(self, "center_source", centers)
        check_depth(self.max_depth)
        check_seed(self.seed)

    @property
    def weights(self) -> List[float]:
        """q_i = lambda_i (1 - p0) / sum(lambda)."""
        total = math.fsum(self.lambdas)
        return [lam * (1.0 - self.p0) / total for lam in self.lambdas]

    def resolve_centers(self) -> List[Point2]:
        source = self.center_source
        if isinstance(source, GaussianCenters):
            return sample_centers(self.n, source.mean, source.cov, source.seed, source.max_rejects)
        return list(source)


# -------------------------
# Assembled city
# -------------------------

@dataclass(frozen=True, eq=False)
class District:
    """Clipped grid segments of one cell with masses summing to q."""

    index: int
    p: float
    q: float
    polygon: ConvexPolygon
    starts: np.ndarray = field(repr=False)
    ends: np.ndarray = field(repr=False)
    depths: np.ndarray = field(repr=False)
    masses: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return int(self.depths.shape[0])

    @property
    def lengths(self) -> np.ndarray:
        return np.hypot(*(self.ends - self.starts).T)

    @property
    def linear_densities(self) -> np.ndarray:
        return self.masses / self.lengths

    @property
    def total_mass(self) -> float:
        return math.fsum(self.masses)

    @property
    def label(self) -> str:
        return f"district-{self.index}"


@dataclass(frozen=True)
class BoundaryRoads:
    edges: Tuple[VoronoiEdge, ...]
    total_mass: float

    @property
    def total_length(self) -> float:
        return math.fsum(e.length for e in self.edges)

    @property
    def linear_density(self) -> float:
        length = self.total_length
        return self.total_mass / length if length > 0 else 0.0

    @property
    def masses(self) -> np.ndarray:
        return np.array([e.length * self.linear_density for e in self.edges])


@dataclass(frozen=True)
class FractalCity:
    config: CityConfig
    diagram: VoronoiDiagram
    districts: Tuple[District, ...]
    boundary: BoundaryRoads

    @property
    def p0(self) -> float:
        return self.config.p0

    @property
    def weights(self) -> List[float]:
        return [d.q for d in self.districts]

    @property
    def total_mass(self) -> float:
        return math.fsum([d.total_mass for d in self.districts] + [self.boundary.total_mass])


@dataclass(frozen=True)
class CityPoint:
    location: Point2
    district: Optional[int]
    depth: Optional[int]

    @property
    def origin(self) -> str:
        return BOUNDARY if self.district is None else f"district-{self.district}"


# -------------------------
# Construction
# -------------------------

def _embed_district(index: int, polygon: ConvexPolygon, p: float, q: float, max_depth: int) -> District:
    """Map the unit-square grid onto the cell's bounding box, clip, and rescale masses to q."""
    network = build_network(p, max_depth, TruncationMode.RENORMALIZED)
    minx, miny, maxx, maxy = polygon.bounds
    scale = np.array([maxx - minx, maxy - miny])
    offset = np.array([minx, miny])
    x0, y0, x1, y1 = network.endpoints()
    starts = offset + np.column_stack([x0, y0]) * scale
    ends = offset + np.column_stack([x1, y1]) * scale

    starts, ends, fraction = clip_segment_arrays(starts, ends, polygon)
    keep = fraction > 0
    if not keep.any():
        raise GeometryError(f"district {index}: clipped grid has zero total length")
    masses = network.masses[keep] * fraction[keep]
    masses = masses * (q / masses.sum())
    return District(
        index=index, p=p, q=q, polygon=polygon,
        starts=starts[keep], ends=ends[keep],
        depths=network.depths[keep].astype(np.int64), masses=masses,
    )


def build_city(config: CityConfig) -> FractalCity:
    """
    Assemble a fractal city from its configuration.

    Centers are resolved, the unit square is tessellated, and every cell
    receives a clipped Manhattan grid renormalized to its weight q_i. Interior
    Voronoi edges carry the boundary weight p0.

    Args:
        config: validated CityConfig

    Returns:
        FractalCity whose component masses sum to 1

    Raises:
        GeometryError: a district grid clips to nothing, or p0 > 0 without
            interior edges
    """
    centers = config.resolve_centers()
    diagram = voronoi_partition(centers)
    weights = config.weights

    districts = tuple(
        _embed_district(i, cell.polygon, config.ps[i], weights[i], config.max_depth)
        for i, cell in enumerate(diagram.cells)
    )
    if config.p0 > 0 and not diagram.interior_edges:
        raise GeometryError("p0 > 0 but the tessellation has no interior edges")
    boundary = BoundaryRoads(diagram.interior_edges, config.p0 if diagram.interior_edges else 0.0)

    city = FractalCity(config, diagram, districts, boundary)
    logger.info(
        "Built city: %d districts, %d district segments, %d boundary edges, total mass %.12f",
        len(districts), sum(len(d) for d in districts), len(boundary.edges), city.total_mass,
    )
    return city


def city_mass_report(city: FractalCity) -> pd.DataFrame:
    """Mass per component; one boundary row when the city has interior edges."""
    rows = [(d.label, d.total_mass) for d in city.districts]
    if city.boundary.edges:
        rows.append((BOUNDARY, city.boundary.total_mass))
    return pd.DataFrame(rows, columns=['component', 'mass'])


# -------------------------
# Sampling
# -------------------------

def _sample_city_chunk(city: FractalCity, seed: int, chunk_index: int, size: int) -> Tuple[np.ndarray, ...]:
    rng = make_rng(seed, STREAM_SAMPLES, chunk_index)
    probs = np.array(city.weights + [city.boundary.total_mass])
    component = rng.choice(len(probs), size=size, p=probs / probs.sum())

    x = np.empty(size)
    y = np.empty(size)
    depth = np.full(size, -1, dtype=np.int64)
    origin = np.where(component == len(city.districts), -1, component)

    for i, district in enumerate(city.districts):
        idx = np.flatnonzero(component == i)
        if idx.size == 0:
            continue
        seg = rng.choice(len(district), size=idx.size, p=district.masses / district.masses.sum())
        t = rng.random(idx.size)[:, None]
        pts = district.starts[seg] + t * (district.ends[seg] - district.starts[seg])
        x[idx], y[idx] = pts[:, 0], pts[:, 1]
        depth[idx] = district.depths[seg]

    idx = np.flatnonzero(component == len(city.districts))
    if idx.size:
        edges = city.boundary.edges
        lengths = np.array([e.length for e in edges])
        starts = np.array([e.segment.start.as_tuple() for e in edges])
        ends = np.array([e.segment.end.as_tuple() for e in edges])
        seg = rng.choice(len(edges), size=idx.size, p=lengths / lengths.sum())
        t = rng.random(idx.size)[:, None]
        pts = starts[seg] + t * (ends[seg] - starts[seg])
        x[idx], y[idx] = pts[:, 0], pts[:, 1]
    return x, y, origin, depth


def sample_city_arrays(city: FractalCity, n: int, seed: Optional[int] = None,
                       n_jobs: int = DEFAULT_N_JOBS) -> Tuple[np.ndarray, ...]:
    """
    (x, y, district index or -1, depth or -1); chunked like manhattan.sample_arrays.

    Without `seed` the city config's master seed drives the sampling stream.
    """
    if n < 0:
        raise ParameterError(f"sample count must be >= 0, got {n}")
    seed = city.config.seed if seed is None else check_seed(seed)
    bounds = chunk_bounds(n)
    if not bounds:
        empty = np.empty(0)
        return empty, empty, np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    parts = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_sample_city_chunk)(city, seed, c, stop - start)
        for c, (start, stop) in enumerate(bounds)
    )
    return tuple(np.concatenate(cols) for cols in zip(*parts))


def sample_city(city: FractalCity, n: int, seed: Optional[int] = None,
                n_jobs: int = DEFAULT_N_JOBS) -> List[CityPoint]:
    """n i.i.d. points from the composite measure, tagged with their component."""
    x, y, origin, depth = sample_city_arrays(city, n, seed, n_jobs)
    return [
        CityPoint(Point2(float(a), float(b)), None if o < 0 else int(o), None if o < 0 else int(d))
        for a, b, o, d in zip(x, y, origin, depth)
    ]


# -------------------------
# Per-district fractal analysis
# -------------------------

def district_streets(city: FractalCity, index: int) -> List[StreetRecord]:
    """Each clipped segment of district `index` as a one-piece street."""
    district = city.districts[index]
    return [
        StreetRecord(f"{district.label}-s{k}", [length], [mass])
        for k, (length, mass) in enumerate(zip(district.lengths, district.masses))
    ]


def district_dimension_report(city: FractalCity, factor: float,
                              skip_head: int = DEFAULT_SKIP_HEAD) -> pd.DataFrame:
    """Estimated against configured dimension for every district."""
    rows = []
    for district in city.districts:
        expected = manhattan_dimension(district.p)
        try:
            estimate = estimate_dimension(district_streets(city, district.index), factor, skip_head)
            rows.append((district.label, district.p, expected, estimate.value,
                         estimate.r_squared, estimate.fit.n_points))
        except FitError as e:
            logger.warning("%s: dimension not estimable (%s)", district.label, e)
            rows.append((district.label, district.p, expected, float('nan'), float('nan'), 0))
    return pd.DataFrame(rows, columns=[
        'district', 'p', 'configured_dimension', 'estimated_dimension', 'r_squared', 'n_points',
    ])
