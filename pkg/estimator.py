"""
estimator.py - Hyperfractal dimension estimation from street length / traffic data

Pipeline: subdivide streets into bounded-variation segments, rank them by
decreasing linear density, fit ln(density) against ln(cumulative length), and
read the dimension off the slope (nu(xi) ~ xi^(1 - dim)).
"""

import logging
from dataclasses import dataclass, field
from typing import Iterable, List, Sequence, Tuple

import numpy as np
import pandas as pd
from sklearn.linear_model import LinearRegression
from sklearn.metrics import r2_score
from sklearn.neighbors import KDTree

from config import DEFAULT_SKIP_HEAD
from errors import FitError, ParameterError
from manhattan import ManhattanNetwork
from measure import DimensionValue, dimension_from_rank_exponent

logger = logging.getLogger(__name__)

# relative gap below which two densities form one rank level
TIE_RTOL = 1e-12


# -------------------------
# Domain types
# -------------------------

@dataclass(frozen=True, eq=False)
class StreetRecord:
    """A street as an ordered run of (length, traffic) pieces."""

    street_id: str
    lengths: np.ndarray
    traffic: np.ndarray

    def __post_init__(self):
        lengths = np.asarray(self.lengths, dtype=float).reshape(-1)
        traffic = np.asarray(self.traffic, dtype=float).reshape(-1)
        if lengths.size == 0:
            raise ParameterError(f"street {self.street_id!r} has no pieces")
        if lengths.shape != traffic.shape:
            raise ParameterError(f"street {self.street_id!r}: lengths and traffic differ in size")
        if np.any(lengths <= 0) or not np.all(np.isfinite(lengths)):
            raise ParameterError(f"street {self.street_id!r}: piece lengths must be > 0")
        if np.any(traffic < 0) or not np.all(np.isfinite(traffic)):
            raise ParameterError(f"street {self.street_id!r}: traffic must be >= 0")
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "traffic", traffic)

    @classmethod
    def from_pieces(cls, street_id: str, pieces: Sequence[Tuple[float, float]]) -> "StreetRecord":
        pieces = list(pieces)
        return cls(street_id, [p[0] for p in pieces], [p[1] for p in pieces])

    @property
    def pieces(self) -> List[Tuple[float, float]]:
        return list(zip(self.lengths.tolist(), self.traffic.tolist()))

    @property
    def total_traffic(self) -> float:
        return float(self.traffic.sum())


@dataclass(frozen=True)
class RankedSegment:
    length: float
    density: float

    @property
    def mass(self) -> float:
        return self.length * self.density


@dataclass(frozen=True, eq=False)
class RankCurve:
    """(xi, nu) pairs: cumulative length against density, xi increasing."""

    xi: np.ndarray
    nu: np.ndarray

    def __len__(self) -> int:
        return int(self.xi.shape[0])

    @property
    def points(self) -> List[Tuple[float, float]]:
        return list(zip(self.xi.tolist(), self.nu.tolist()))


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    log_intercept: float
    r_squared: float
    n_points: int
    excluded_zero: int = 0
    skipped_head: int = 0

    def predict(self, xi: np.ndarray) -> np.ndarray:
        return np.exp(self.log_intercept) * np.asarray(xi, dtype=float) ** self.exponent


@dataclass(frozen=True)
class DimensionEstimate:
    value: DimensionValue
    fit: PowerLawFit = field(repr=False)

    @property
    def r_squared(self) -> float:
        return self.fit.r_squared

    @property
    def exponent(self) -> float:
        return self.fit.exponent


# -------------------------
# Step 2: subdivision
# -------------------------

def _merge_street(street: StreetRecord, factor: float) -> List[RankedSegment]:
    lengths, traffic = street.lengths, street.traffic
    density = traffic / lengths

    # whole street already within the bound: one segment
    if np.all(density > 0) and density.max() <= factor * density.min():
        return [RankedSegment(float(lengths.sum()), float(traffic.sum() / lengths.sum()))]

    segments = []
    group_len = group_traffic = 0.0
    lo = hi = None
    for length, mass, d in zip(lengths.tolist(), traffic.tolist(), density.tolist()):
        if group_len > 0:
            zero_group = hi == 0.0
            if zero_group and d == 0.0:
                group_len += length
                continue
            if not zero_group and d > 0.0 and max(hi, d) <= factor * min(lo, d):
                group_len += length
                group_traffic += mass
                lo, hi = min(lo, d), max(hi, d)
                continue
            segments.append(RankedSegment(group_len, group_traffic / group_len))
        group_len, group_traffic, lo, hi = length, mass, d, d
    segments.append(RankedSegment(group_len, group_traffic / group_len))
    return segments


def subdivide(streets: Iterable[StreetRecord], factor: float) -> List[RankedSegment]:
    """
    Greedily merge consecutive pieces of each street while the group's
    max/min piece density stays within `factor`.

    Zero-density pieces never join positive ones; a run of them becomes one
    zero-density segment.
    """
    factor = float(factor)
    if not factor > 1.0:
        raise ParameterError(f"variation factor A must be > 1, got {factor}")
    segments = []
    n_streets = 0
    for street in streets:
        segments.extend(_merge_street(street, factor))
        n_streets += 1
    logger.debug("Subdivided %d streets into %d segments (A=%g)", n_streets, len(segments), factor)
    return segments


# -------------------------
# Step 3: ranking
# -------------------------

def rank_curve(segments: Sequence[RankedSegment]) -> RankCurve:
    """
    Sort by strictly decreasing density (ties merged by summing lengths) and
    accumulate length.

    Densities within TIE_RTOL of the next higher one count as ties; a level
    keeps its highest density.
    """
    frame = pd.DataFrame({
        'length': [s.length for s in segments],
        'density': [s.density for s in segments],
    }).sort_values('density', ascending=False, kind='stable', ignore_index=True)
    density = frame['density'].to_numpy()
    new_level = np.ones(len(density), dtype=bool)
    new_level[1:] = density[:-1] - density[1:] > TIE_RTOL * density[:-1]
    frame['level'] = np.cumsum(new_level)
    levels = frame.groupby('level', sort=True).agg(length=('length', 'sum'), density=('density', 'first'))
    if len(levels) < 2:
        raise FitError(
            f"rank curve needs at least 2 distinct density levels, got {len(levels)}"
        )
    xi = levels['length'].to_numpy().cumsum()
    nu = levels['density'].to_numpy(dtype=float)
    return RankCurve(xi=xi, nu=nu)


def curve_frame(curve: RankCurve) -> pd.DataFrame:
    return pd.DataFrame({'xi': curve.xi, 'nu': curve.nu})


# -------------------------
# Step 4: power-law fit
# -------------------------

def fit_power_law(curve: RankCurve, skip_head: int = DEFAULT_SKIP_HEAD) -> PowerLawFit:
    """
    Ordinary least squares of ln(nu) on ln(xi).

    Zero densities are excluded (they still count in xi). `skip_head` drops
    the first usable points, i.e. the highest-density levels, where the
    relation does not hold yet; the skip shrinks so that at least two usable
    points remain.
    """
    usable = curve.nu > 0
    excluded = int((~usable).sum())
    if not usable.any():
        raise FitError("all densities are zero; nothing to fit")
    if excluded:
        logger.warning("Excluded %d zero-density rank points from the fit", excluded)
    n_usable = int(usable.sum())
    skip = max(0, min(int(skip_head), n_usable - 2))
    if skip < skip_head:
        logger.warning(
            "Only %d usable rank points; skipping %d head points instead of %d",
            n_usable, skip, skip_head,
        )
    x = np.log(curve.xi[usable])[skip:]
    y = np.log(curve.nu[usable])[skip:]
    if x.size < 2:
        raise FitError(f"power-law fit needs at least 2 usable points, got {x.size}")

    model = LinearRegression().fit(x.reshape(-1, 1), y)
    predicted = model.predict(x.reshape(-1, 1))
    if np.allclose(y, y[0]):
        # constant response: the line is exact
        r2 = 1.0
    else:
        r2 = float(min(max(r2_score(y, predicted), 0.0), 1.0))
    return PowerLawFit(
        exponent=float(model.coef_[0]),
        log_intercept=float(model.intercept_),
        r_squared=r2,
        n_points=int(x.size),
        excluded_zero=excluded,
        skipped_head=skip,
    )


def estimate_dimension(streets: Iterable[StreetRecord], factor: float,
                       skip_head: int = DEFAULT_SKIP_HEAD) -> DimensionEstimate:
    """
    Estimate the dimension of the measure carried by `streets`.

    Subdivides, ranks and fits; the dimension is 1 - exponent.

    Args:
        streets: street records with per-piece length and traffic
        factor: variation bound A > 1 used by `subdivide`
        skip_head: leading rank points left out of the fit

    Returns:
        DimensionEstimate with the value and the underlying PowerLawFit
    """
    curve = rank_curve(subdivide(streets, factor))
    fit = fit_power_law(curve, skip_head=skip_head)
    value = dimension_from_rank_exponent(fit.exponent)
    logger.info(
        "Estimated dimension %.4f (exponent %.4f, r2 %.4f, %d points)",
        value, fit.exponent, fit.r_squared, fit.n_points,
    )
    return DimensionEstimate(value=value, fit=fit)


# -------------------------
# Bridges and diagnostics
# -------------------------

def network_to_streets(network: ManhattanNetwork) -> List[StreetRecord]:
    """One street per grid line; its pieces are the line's own segments with traffic = mass."""
    table = network.mass_by_depth()
    streets = []
    for axis, level, b, run in network.iter_lines():
        count = run.stop - run.start
        prefix = 'v' if axis.value == 'vertical' else 'h'
        streets.append(StreetRecord(
            street_id=f"{prefix}-l{level}-b{b}",
            lengths=np.full(count, 2.0 ** -level),
            traffic=np.full(count, table[level]),
        ))
    return streets


def local_dimension_estimate(points, center, radii: Sequence[float]) -> float:
    """
    Slope of ln(empirical ball mass) against ln(radius) around `center`.

    `points` is an (n, 2) array or a sequence of objects with x / y.
    """
    coords = _as_coords(points)
    if coords.shape[0] == 0:
        raise ParameterError("local dimension needs at least one point")
    radii = np.asarray(sorted(radii, reverse=True), dtype=float)
    if radii.size < 2 or np.any(radii <= 0):
        raise ParameterError("local dimension needs at least 2 positive radii")
    cx, cy = (center.x, center.y) if hasattr(center, 'x') else center

    tree = KDTree(coords)
    centre = np.array([[cx, cy]])
    counts = np.array([tree.query_radius(centre, r=r, count_only=True)[0] for r in radii], dtype=float)
    mass = counts / coords.shape[0]
    keep = mass > 0
    if keep.sum() < 2:
        raise FitError("fewer than 2 radii contain any point")
    x = np.log(radii[keep]).reshape(-1, 1)
    y = np.log(mass[keep])
    return float(LinearRegression().fit(x, y).coef_[0])


def _as_coords(points) -> np.ndarray:
    if isinstance(points, np.ndarray):
        return points.reshape(-1, 2).astype(float)
    return np.array([(p.x, p.y) if hasattr(p, 'x') else tuple(p) for p in points], dtype=float).reshape(-1, 2)
