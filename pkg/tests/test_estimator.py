import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from errors import FitError, ParameterError
from estimator import (
    RankCurve, RankedSegment, StreetRecord, estimate_dimension, fit_power_law,
    local_dimension_estimate, network_to_streets, rank_curve, subdivide,
)
from manhattan import TruncationMode, build_network
from measure import manhattan_dimension, nu_exponent

A_IDEAL = 1 + 1e-9


def _street(pieces, street_id="s"):
    return StreetRecord.from_pieces(street_id, pieces)


# -------------------------
# subdivide
# -------------------------

def test_subdivide_single_piece():
    (seg,) = subdivide([_street([(2.0, 6.0)])], 1.5)
    assert seg.length == 2.0
    assert seg.density == 3.0
    assert seg.mass == pytest.approx(6.0)


def test_subdivide_merges_within_bound():
    (seg,) = subdivide([_street([(1.0, 10.0), (1.0, 10.5)])], 1.1)
    assert seg.length == 2.0
    assert seg.density == pytest.approx(10.25)


def test_subdivide_splits_beyond_bound():
    segs = subdivide([_street([(1.0, 10.0), (1.0, 30.0)])], 2.0)
    assert [s.density for s in segs] == [10.0, 30.0]


def test_subdivide_greedy_left_to_right():
    segs = subdivide([_street([(1.0, 1.0), (1.0, 1.5), (1.0, 2.5), (1.0, 2.0)])], 2.0)
    assert [s.length for s in segs] == [2.0, 2.0]
    assert [s.density for s in segs] == pytest.approx([1.25, 2.25])


def test_subdivide_zero_density_runs():
    segs = subdivide([_street([(1.0, 0.0), (1.0, 0.0), (1.0, 5.0)])], 10.0)
    assert [(s.length, s.density) for s in segs] == [(2.0, 0.0), (1.0, 5.0)]


def test_subdivide_rejects_factor_at_most_one():
    with pytest.raises(ParameterError):
        subdivide([_street([(1.0, 1.0)])], 1.0)


def test_street_record_validation():
    with pytest.raises(ParameterError):
        _street([])
    with pytest.raises(ParameterError):
        _street([(0.0, 1.0)])
    with pytest.raises(ParameterError):
        _street([(1.0, -1.0)])


@settings(max_examples=50, deadline=None)
@given(st.lists(
    st.lists(st.tuples(st.floats(0.01, 10.0), st.floats(0.0, 100.0)), min_size=1, max_size=8),
    min_size=1, max_size=6,
), st.floats(1.01, 5.0))
def test_subdivide_conserves_mass(streets, factor):
    records = [_street(pieces, f"s{i}") for i, pieces in enumerate(streets)]
    before = math.fsum(t for pieces in streets for _, t in pieces)
    after = math.fsum(s.length * s.density for s in subdivide(records, factor))
    assert after == pytest.approx(before, rel=1e-9, abs=1e-12)


# -------------------------
# rank_curve
# -------------------------

def test_rank_curve_sorts_and_accumulates():
    curve = rank_curve([RankedSegment(2.0, 1.0), RankedSegment(1.0, 5.0)])
    assert curve.points == [(1.0, 5.0), (3.0, 1.0)]


def test_rank_curve_merges_ties():
    curve = rank_curve([RankedSegment(1.0, 2.0), RankedSegment(1.5, 2.0), RankedSegment(1.0, 1.0)])
    assert curve.points == [(2.5, 2.0), (3.5, 1.0)]


def test_rank_curve_rejects_single_level():
    with pytest.raises(FitError):
        rank_curve([RankedSegment(1.0, 2.0)] * 3)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(0.1, 5.0), st.sampled_from([0.5, 1.0, 2.0, 4.0, 8.0])),
                min_size=2, max_size=20).filter(lambda rows: len({d for _, d in rows}) >= 2),
       st.randoms(use_true_random=False))
def test_rank_curve_permutation_invariant(rows, rnd):
    segments = [RankedSegment(length, density) for length, density in rows]
    shuffled = list(segments)
    rnd.shuffle(shuffled)
    a, b = rank_curve(segments), rank_curve(shuffled)
    assert np.array_equal(a.nu, b.nu)
    assert np.allclose(a.xi, b.xi, rtol=1e-12)
    assert np.all(np.diff(a.xi) > 0)
    assert np.all(np.diff(a.nu) < 0)


def test_rank_curve_manhattan_closed_form():
    k_max = 5
    curve = rank_curve(subdivide(network_to_streets(build_network(0.5, k_max, TruncationMode.RAW)), A_IDEAL))
    k = np.arange(k_max + 1)
    assert curve.xi.tolist() == pytest.approx((2 * (2.0 ** (k + 1) - 1)).tolist())
    assert curve.nu.tolist() == pytest.approx((0.25 * 0.25 ** k).tolist())


# -------------------------
# fit_power_law / estimate_dimension
# -------------------------

def test_fit_exact_power_law():
    xi = np.array([1.0, 2.0, 4.0])
    curve = RankCurve(xi=xi, nu=xi ** -1.5)
    fit = fit_power_law(curve)
    assert fit.exponent == pytest.approx(-1.5, abs=1e-12)
    assert fit.r_squared == pytest.approx(1.0)
    # default head skip shrinks to keep two points
    assert (fit.skipped_head, fit.n_points) == (1, 2)
    full = fit_power_law(curve, skip_head=0)
    assert full.exponent == pytest.approx(-1.5, abs=1e-12)
    assert full.n_points == 3


def test_fit_constant_density():
    fit = fit_power_law(RankCurve(xi=np.array([1.0, math.e]), nu=np.array([3.0, 3.0])))
    assert fit.exponent == pytest.approx(0.0, abs=1e-12)
    assert fit.r_squared == 1.0


def test_fit_excludes_zero_densities(caplog):
    curve = rank_curve([RankedSegment(1.0, 5.0), RankedSegment(1.0, 3.0), RankedSegment(2.0, 0.0)])
    with caplog.at_level(logging.WARNING):
        fit = fit_power_law(curve)
    assert fit.n_points == 2
    assert fit.excluded_zero == 1
    assert "zero-density" in caplog.text


def test_fit_rejects_degenerate_curves():
    with pytest.raises(FitError):
        fit_power_law(RankCurve(xi=np.array([1.0, 2.0]), nu=np.array([0.0, 0.0])))
    with pytest.raises(FitError):
        fit_power_law(RankCurve(xi=np.array([1.0, 2.0]), nu=np.array([1.0, 0.0])))


def test_fit_manhattan_table_slope():
    streets = network_to_streets(build_network(0.5, 10, TruncationMode.RAW))
    fit = fit_power_law(rank_curve(subdivide(streets, A_IDEAL)))
    assert fit.exponent == pytest.approx(nu_exponent(0.5), abs=0.05)
    assert fit.r_squared >= 0.99


@pytest.mark.parametrize("p, tol", [(0.3, 0.08), (0.5, 0.05), (0.8, 0.08)])
def test_estimate_dimension_round_trip(p, tol):
    streets = network_to_streets(build_network(p, 10, TruncationMode.RAW))
    estimate = estimate_dimension(streets, A_IDEAL)
    assert estimate.value == pytest.approx(manhattan_dimension(p), abs=tol)
    assert estimate.r_squared >= 0.99


def test_estimate_dimension_planar_power_law():
    xi = 2.0 ** np.arange(10)
    lengths = np.diff(np.concatenate([[0.0], xi]))
    streets = [_street([(float(l), float(l / x))], f"s{i}") for i, (l, x) in enumerate(zip(lengths, xi))]
    estimate = estimate_dimension(streets, 1.5)
    assert estimate.value == pytest.approx(2.0, abs=1e-9)


def test_estimate_dimension_scaling_invariance():
    streets = network_to_streets(build_network(0.4, 8, TruncationMode.RAW))
    base = estimate_dimension(streets, A_IDEAL)
    heavy = [StreetRecord(s.street_id, s.lengths, s.traffic * 7.3) for s in streets]
    longer = [StreetRecord(s.street_id, s.lengths * 3.0, s.traffic) for s in streets]
    assert estimate_dimension(heavy, A_IDEAL).exponent == pytest.approx(base.exponent, abs=1e-9)
    stretched = estimate_dimension(longer, A_IDEAL)
    assert stretched.exponent == pytest.approx(base.exponent, abs=1e-9)
    assert stretched.fit.log_intercept != pytest.approx(base.fit.log_intercept)


def test_estimate_dimension_clamps_skip(caplog):
    streets = [_street([(1.0, 4.0)], "a"), _street([(1.0, 2.0)], "b"), _street([(2.0, 2.0)], "c")]
    with caplog.at_level(logging.WARNING):
        estimate = estimate_dimension(streets, 1.5, skip_head=3)
    assert estimate.fit.skipped_head == 1
    assert estimate.fit.n_points == 2
    assert "skipping" in caplog.text


# -------------------------
# network_to_streets
# -------------------------

def test_network_to_streets_depth_zero():
    streets = network_to_streets(build_network(0.5, 0, TruncationMode.RAW))
    assert len(streets) == 2
    assert [len(s.lengths) for s in streets] == [1, 1]


def test_network_to_streets_depth_one():
    streets = network_to_streets(build_network(0.5, 1, TruncationMode.RAW))
    assert [len(s.lengths) for s in streets] == [1, 1, 2, 2, 2, 2]
    assert len({s.street_id for s in streets}) == 6


@pytest.mark.parametrize("mode, total", [(TruncationMode.RAW, 1 - 0.6 ** 7), (TruncationMode.RENORMALIZED, 1.0)])
def test_network_to_streets_conserves_mass(mode, total):
    streets = network_to_streets(build_network(0.4, 6, mode))
    assert math.fsum(s.total_traffic for s in streets) == pytest.approx(total, abs=1e-10)


# -------------------------
# local dimension
# -------------------------

RADII = np.geomspace(0.2, 0.02, 8)


def test_local_dimension_uniform_square():
    pts = np.random.default_rng(0).random((100_000, 2))
    assert local_dimension_estimate(pts, (0.5, 0.5), RADII) == pytest.approx(2.0, abs=0.15)


def test_local_dimension_line():
    rng = np.random.default_rng(1)
    pts = np.column_stack([rng.random(100_000), np.full(100_000, 0.5)])
    assert local_dimension_estimate(pts, (0.5, 0.5), RADII) == pytest.approx(1.0, abs=0.15)


def test_local_dimension_point_mass():
    pts = np.full((50, 2), 0.5)
    assert local_dimension_estimate(pts, (0.5, 0.5), RADII) == pytest.approx(0.0, abs=1e-12)


def test_local_dimension_needs_two_nonempty_radii():
    pts = np.array([[0.9, 0.9]])
    with pytest.raises(FitError):
        local_dimension_estimate(pts, (0.1, 0.1), RADII)
