"""
geometry.py - Gaussian district centers, covariance eigenstructure, bounded Voronoi
tessellation of the unit square and segment / polygon clipping
"""

import math
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import shapely
from shapely.geometry import LineString, Polygon, box
from shapely.geometry.polygon import orient

from config import DEFAULT_MAX_REJECTS, STREAM_CENTERS, make_rng
from errors import GeometryError, ParameterError

logger = logging.getLogger(__name__)

PSD_TOL = 1e-12
MIN_SEPARATION = 1e-9
EDGE_TOL = 1e-12
# half-plane polygons reach this far from the bisector midpoint
HALF_PLANE_REACH = 4.0

UNIT_SQUARE = box(0.0, 0.0, 1.0, 1.0)


# -------------------------
# Domain types
# -------------------------

@dataclass(frozen=True)
class Point2:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ParameterError(f"point coordinates must be finite, got ({self.x}, {self.y})")

    def as_tuple(self) -> Tuple[float, float]:
        return (self.x, self.y)

    def in_unit_square(self, tol: float = 0.0) -> bool:
        return -tol <= self.x <= 1.0 + tol and -tol <= self.y <= 1.0 + tol


@dataclass(frozen=True)
class LineSegment:
    start: Point2
    end: Point2

    @property
    def length(self) -> float:
        return math.hypot(self.end.x - self.start.x, self.end.y - self.start.y)

    @property
    def midpoint(self) -> Point2:
        return Point2((self.start.x + self.end.x) / 2, (self.start.y + self.end.y) / 2)

    def to_shapely(self) -> LineString:
        return LineString([self.start.as_tuple(), self.end.as_tuple()])


@dataclass(frozen=True)
class ClippedSegment:
    segment: LineSegment
    fraction: float


@dataclass(frozen=True)
class CovarianceSpec:
    """Symmetric PSD matrix [[sxx, sxy], [sxy, syy]]."""

    sxx: float
    sxy: float
    syy: float

    def __post_init__(self):
        if self.sxx < 0 or self.syy < 0 or self.sxx * self.syy - self.sxy ** 2 < -PSD_TOL:
            raise GeometryError(
                f"covariance [[{self.sxx}, {self.sxy}], [{self.sxy}, {self.syy}]] is not positive semidefinite"
            )

    @classmethod
    def diagonal(cls, sxx: float, syy: float) -> "CovarianceSpec":
        return cls(sxx, 0.0, syy)

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.sxx, self.sxy], [self.sxy, self.syy]], dtype=float)


@dataclass(frozen=True)
class ConvexPolygon:
    """Counter-clockwise vertices, collinear and repeated vertices removed."""

    vertices: Tuple[Point2, ...]

    @classmethod
    def from_shapely(cls, poly: Polygon) -> "ConvexPolygon":
        return cls(tuple(Point2(float(x), float(y)) for x, y in _clean_ring(poly)))

    def to_shapely(self) -> Polygon:
        return Polygon([v.as_tuple() for v in self.vertices])

    @property
    def area(self) -> float:
        return float(self.to_shapely().area)

    @property
    def bounds(self) -> Tuple[float, float, float, float]:
        xs = [v.x for v in self.vertices]
        ys = [v.y for v in self.vertices]
        return min(xs), min(ys), max(xs), max(ys)

    def edges(self) -> List[LineSegment]:
        n = len(self.vertices)
        return [LineSegment(self.vertices[i], self.vertices[(i + 1) % n]) for i in range(n)]

    def contains(self, point: Point2, tol: float = 1e-9) -> bool:
        return self.to_shapely().distance(shapely.Point(point.x, point.y)) <= tol


@dataclass(frozen=True)
class VoronoiCell:
    center: Point2
    polygon: ConvexPolygon


@dataclass(frozen=True)
class VoronoiEdge:
    """Interior edge shared by cells `left` < `right`."""

    left: int
    right: int
    segment: LineSegment

    @property
    def length(self) -> float:
        return self.segment.length


@dataclass(frozen=True)
class VoronoiDiagram:
    cells: Tuple[VoronoiCell, ...]
    interior_edges: Tuple[VoronoiEdge, ...]

    def __len__(self) -> int:
        return len(self.cells)

    @property
    def centers(self) -> List[Point2]:
        return [c.center for c in self.cells]

    @property
    def total_area(self) -> float:
        return math.fsum(c.polygon.area for c in self.cells)

    @property
    def interior_length(self) -> float:
        return math.fsum(e.length for e in self.interior_edges)

    def locate(self, point: Point2, tol: float = 1e-9) -> Optional[int]:
        """Index of the first cell containing `point`."""
        for i, cell in enumerate(self.cells):
            if cell.polygon.contains(point, tol):
                return i
        return None


# -------------------------
# Covariance eigenstructure and Gaussian centers
# -------------------------

def eigen_decompose(cov: CovarianceSpec) -> Tuple[np.ndarray, np.ndarray]:
    """
    Sigma = Q diag(Lambda) Q^T with Lambda descending.

    Columns of Q have their first nonzero component positive; a repeated
    eigenvalue returns the identity basis.
    """
    matrix = cov.matrix
    values, vectors = np.linalg.eigh(matrix)
    values, vectors = values[::-1], vectors[:, ::-1]
    if values[-1] < -PSD_TOL:
        raise GeometryError(f"covariance has negative eigenvalue {values[-1]:.3g}")
    values = np.clip(values, 0.0, None)

    scale = max(1.0, abs(values[0]))
    if values[0] - values[1] <= 1e-14 * scale and abs(cov.sxy) <= 1e-14 * scale:
        return np.eye(2), np.sort([cov.sxx, cov.syy])[::-1]

    for col in range(2):
        v = vectors[:, col]
        lead = v[np.flatnonzero(np.abs(v) > 1e-15)[0]]
        if lead < 0:
            vectors[:, col] = -v
    return vectors, values


def _sprawl_transform(cov: CovarianceSpec) -> np.ndarray:
    q, lam = eigen_decompose(cov)
    return q @ np.diag(np.sqrt(lam))


def gaussian_stream(n: int, mean: Point2, cov: CovarianceSpec, seed: int) -> np.ndarray:
    """Untruncated (n, 2) draws mean + Q sqrt(Lambda) z."""
    rng = make_rng(seed, STREAM_CENTERS)
    z = rng.standard_normal((n, 2))
    return np.array(mean.as_tuple()) + z @ _sprawl_transform(cov).T


def sample_centers(n: int, mean: Point2, cov: CovarianceSpec, seed: int,
                   max_rejects: int = DEFAULT_MAX_REJECTS) -> List[Point2]:
    """
    n district centers from N(mean, cov) truncated to the unit square by rejection.

    Raises GeometryError after `max_rejects` consecutive rejections.
    """
    if n < 1:
        raise ParameterError(f"need at least one center, got n={n}")
    transform = _sprawl_transform(cov)
    origin = np.array(mean.as_tuple())
    rng = make_rng(seed, STREAM_CENTERS)

    centers: List[Point2] = []
    rejects = total_rejects = 0
    while len(centers) < n:
        x, y = origin + transform @ rng.standard_normal(2)
        if 0.0 <= x <= 1.0 and 0.0 <= y <= 1.0:
            centers.append(Point2(float(x), float(y)))
            rejects = 0
            continue
        rejects += 1
        total_rejects += 1
        if rejects > max_rejects:
            raise GeometryError(
                f"{rejects} consecutive samples fell outside the unit square; acceptance "
                f"probability too low for mean ({mean.x}, {mean.y}) and this covariance"
            )
    logger.debug("Sampled %d centers with %d rejections", n, total_rejects)
    return centers


# -------------------------
# Voronoi tessellation
# -------------------------

def _clean_ring(poly: Polygon) -> List[Tuple[float, float]]:
    """CCW vertex list without closing point, repeats or collinear vertices."""
    poly = orient(poly, sign=1.0)
    pts = np.asarray(poly.exterior.coords)[:-1]
    changed = True
    while changed and len(pts) > 3:
        changed = False
        keep = []
        n = len(pts)
        for i in range(n):
            prev, cur, nxt = pts[i - 1], pts[i], pts[(i + 1) % n]
            if np.hypot(*(cur - prev)) <= EDGE_TOL:
                changed = True
                continue
            cross = (cur[0] - prev[0]) * (nxt[1] - cur[1]) - (cur[1] - prev[1]) * (nxt[0] - cur[0])
            if abs(cross) <= EDGE_TOL ** 2:
                changed = True
                continue
            keep.append(cur)
        if len(keep) < 3:
            break
        pts = np.array(keep)
    return [(float(x), float(y)) for x, y in pts]


def _half_plane(ci: np.ndarray, cj: np.ndarray) -> Polygon:
    """Large quad covering {x : |x - ci| <= |x - cj|} near the unit square."""
    mid = (ci + cj) / 2.0
    normal = (ci - cj) / np.linalg.norm(ci - cj)
    along = np.array([-normal[1], normal[0]])
    reach = HALF_PLANE_REACH
    return Polygon([
        mid + reach * along,
        mid - reach * along,
        mid - reach * along + 2 * reach * normal,
        mid + reach * along + 2 * reach * normal,
    ])


def _validate_centers(centers: Sequence[Point2]) -> np.ndarray:
    if len(centers) < 1:
        raise GeometryError("at least one center is required")
    outside = [c for c in centers if not c.in_unit_square()]
    if outside:
        raise GeometryError(f"centers outside the unit square: {outside[:3]}")
    pts = np.array([c.as_tuple() for c in centers], dtype=float)
    if len(pts) > 1:
        gaps = np.hypot(*(pts[:, None, :] - pts[None, :, :]).transpose(2, 0, 1))
        np.fill_diagonal(gaps, np.inf)
        i, j = np.unravel_index(np.argmin(gaps), gaps.shape)
        if gaps[i, j] < MIN_SEPARATION:
            raise GeometryError(f"centers {min(i, j)} and {max(i, j)} coincide (separation {gaps[i, j]:.3g})")
    return pts


def voronoi_partition(centers: Sequence[Point2]) -> VoronoiDiagram:
    """
    Bounded Voronoi cells as the unit square clipped by every bisector
    half-plane, nearest competitors first.
    """
    pts = _validate_centers(centers)
    n = len(pts)

    cells = []
    for i in range(n):
        cell = UNIT_SQUARE
        order = np.argsort(np.hypot(*(pts - pts[i]).T), kind='stable')
        for j in order:
            if j == i:
                continue
            cell = cell.intersection(_half_plane(pts[i], pts[j]))
        if cell.is_empty or cell.geom_type != 'Polygon':
            raise GeometryError(f"cell {i} degenerated during clipping ({cell.geom_type})")
        cells.append(VoronoiCell(centers[i], ConvexPolygon.from_shapely(cell)))

    edges = []
    for i, cell in enumerate(cells):
        for edge in cell.polygon.edges():
            if edge.length <= EDGE_TOL or _on_border(edge):
                continue
            mid = np.array(edge.midpoint.as_tuple())
            dist = np.hypot(*(pts - mid).T)
            dist[i] = np.inf
            j = int(np.argmin(dist))
            if i < j:
                edges.append(VoronoiEdge(i, j, edge))

    diagram = VoronoiDiagram(tuple(cells), tuple(edges))
    logger.info(
        "Voronoi partition: %d cells, %d interior edges (length %.6f)",
        n, len(edges), diagram.interior_length,
    )
    return diagram


def _on_border(edge: LineSegment) -> bool:
    a, b = edge.start, edge.end
    for value_a, value_b in ((a.x, b.x), (a.y, b.y)):
        for side in (0.0, 1.0):
            if abs(value_a - side) <= EDGE_TOL and abs(value_b - side) <= EDGE_TOL:
                return True
    return False


# -------------------------
# Clipping
# -------------------------

def clip_segment(seg: LineSegment, poly: ConvexPolygon) -> Optional[ClippedSegment]:
    """Part of `seg` inside the convex polygon (same orientation), or None."""
    if seg.length == 0:
        return None
    inter = seg.to_shapely().intersection(poly.to_shapely())
    if inter.is_empty or inter.length <= 0:
        return None
    coords = np.asarray(shapely.get_coordinates(inter))
    start, end = coords[0], coords[-1]
    direction = np.array([seg.end.x - seg.start.x, seg.end.y - seg.start.y])
    if np.dot(end - start, direction) < 0:
        start, end = end, start
    clipped = LineSegment(Point2(float(start[0]), float(start[1])), Point2(float(end[0]), float(end[1])))
    return ClippedSegment(clipped, min(1.0, float(inter.length) / seg.length))


def clip_segment_arrays(starts: np.ndarray, ends: np.ndarray,
                        poly: ConvexPolygon) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Vectorized clip_segment over (n, 2) endpoint arrays.

    Returns clipped starts, ends and retained fractions; rows with nothing
    left have fraction 0 and their original endpoints.
    """
    lines = shapely.linestrings(np.stack([starts, ends], axis=1))
    inter = shapely.intersection(lines, poly.to_shapely())
    original = np.hypot(*(ends - starts).T)
    kept_len = shapely.length(inter)
    fraction = np.where(original > 0, np.minimum(kept_len / np.where(original > 0, original, 1.0), 1.0), 0.0)

    new_starts, new_ends = starts.copy(), ends.copy()
    hit = np.flatnonzero(kept_len > 0)
    if hit.size:
        coords, index = shapely.get_coordinates(inter[hit], return_index=True)
        first = np.unique(index, return_index=True)[1]
        last = len(index) - 1 - np.unique(index[::-1], return_index=True)[1]
        a, b = coords[first], coords[last]
        direction = ends[hit] - starts[hit]
        flip = np.einsum('ij,ij->i', b - a, direction) < 0
        a[flip], b[flip] = b[flip].copy(), a[flip].copy()
        new_starts[hit], new_ends[hit] = a, b
    return new_starts, new_ends, fraction
