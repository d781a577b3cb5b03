import json
import math

import numpy as np
import pytest

from city import BOUNDARY, build_city, sample_city
from config import load_city_config
from errors import CsvFormatError, HyperfractalError
from estimator import StreetRecord
from exporters import (
    GRID_ORIGIN, POINT_COLUMNS, atomic_write_text, collect_features, export_geojson,
    export_points_csv, export_streets_csv, import_streets_csv, read_geojson, read_points_csv,
    write_feature_collection,
)
from manhattan import TruncationMode, build_network, sample_points
from render import render_svg, stroke_width
from styles import DARK_THEME, MIN_STROKE_PX


def _write(tmp_path, text, name="streets.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


# -------------------------
# Street CSV import
# -------------------------

def test_import_single_row(tmp_path):
    path = _write(tmp_path, "street_id,piece_index,length,traffic\na,0,2.5,10\n")
    (street,) = import_streets_csv(path)
    assert street.street_id == "a"
    assert street.pieces == [(2.5, 10.0)]


def test_import_sorts_pieces_and_keeps_street_order(tmp_path):
    path = _write(tmp_path, "\n".join([
        "street_id,piece_index,length,traffic",
        "b,1,1.0,3",
        "a,0,1.0,1",
        "b,0,2.0,4",
    ]) + "\n")
    streets = import_streets_csv(path)
    assert [s.street_id for s in streets] == ["b", "a"]
    assert streets[0].pieces == [(2.0, 4.0), (1.0, 3.0)]


def test_import_duplicate_piece_names_line(tmp_path):
    path = _write(tmp_path, "street_id,piece_index,length,traffic\na,0,1,1\na,1,1,1\na,0,1,2\n")
    with pytest.raises(CsvFormatError, match="line 4"):
        import_streets_csv(path)


@pytest.mark.parametrize("text, line", [
    ("id,piece,len,t\na,0,1,1\n", 1),
    ("", 1),
    ("street_id,piece_index,length,traffic\na,0,1,1\na,1,-2,1\n", 3),
    ("street_id,piece_index,length,traffic\na,0,0,1\n", 2),
    ("street_id,piece_index,length,traffic\na,0,1,-1\n", 2),
    ("street_id,piece_index,length,traffic\na,0,1,x\n", 2),
    ("street_id,piece_index,length,traffic\na,0.5,1,1\n", 2),
    ("street_id,piece_index,length,traffic\n\n\na,0,1,x\n", 4),
    ("street_id,piece_index,length,traffic\na,1,1,2,9\n", 2),
    ("street_id,piece_index,length,traffic\na,0,1,1\n\na,1,1\n", 4),
])
def test_import_rejects_bad_rows(tmp_path, text, line):
    with pytest.raises(CsvFormatError) as info:
        import_streets_csv(_write(tmp_path, text))
    assert info.value.line == line


def test_import_rejects_gaps_in_piece_indices(tmp_path):
    path = _write(tmp_path, "street_id,piece_index,length,traffic\na,0,1,1\na,2,1,1\n")
    with pytest.raises(CsvFormatError):
        import_streets_csv(path)


def test_import_skips_blank_lines(tmp_path):
    path = _write(tmp_path, "street_id,piece_index,length,traffic\n\na,0,1,2\n\n\na,1,3,4\n\n")
    (street,) = import_streets_csv(path)
    assert street.pieces == [(1.0, 2.0), (3.0, 4.0)]


def test_import_rejects_invalid_utf8(tmp_path):
    path = tmp_path / "streets.csv"
    path.write_bytes(b"street_id,piece_index,length,traffic\n\xff\xfe,0,1,2\n")
    with pytest.raises(CsvFormatError) as info:
        import_streets_csv(str(path))
    assert info.value.line == 2


def test_street_csv_round_trip(tmp_path):
    streets = [
        StreetRecord("main", [0.1, 1 / 3, 2.0], [0.0, 7.25, 1e-9]),
        StreetRecord("side", [5.0], [2 / 3]),
    ]
    path = str(tmp_path / "out.csv")
    export_streets_csv(streets, path)
    back = import_streets_csv(path)
    assert [s.street_id for s in back] == ["main", "side"]
    for a, b in zip(streets, back):
        assert np.array_equal(a.lengths, b.lengths)
        assert np.array_equal(a.traffic, b.traffic)


# -------------------------
# GeoJSON
# -------------------------

def test_geojson_depth_zero_network(tmp_path):
    path = str(tmp_path / "grid.geojson")
    export_geojson(build_network(0.5, 0, TruncationMode.RAW), path)
    features = read_geojson(path)
    assert len(features) == 2
    for feature in features:
        assert feature["geometry"]["type"] == "LineString"
        assert feature["properties"]["depth"] == 0
        assert feature["properties"]["mass"] == pytest.approx(0.25)


def test_geojson_masses_and_order():
    features = collect_features(build_network(0.4, 4))
    assert math.fsum(f["properties"]["mass"] for f in features) == pytest.approx(1.0, abs=1e-10)
    depths = [f["properties"]["depth"] for f in features]
    assert depths == sorted(depths)


def test_geojson_byte_identical(tmp_path, two_district_doc):
    city = build_city(load_city_config(two_district_doc))
    a, b = tmp_path / "a.geojson", tmp_path / "b.geojson"
    export_geojson(city, str(a))
    export_geojson(build_city(load_city_config(two_district_doc)), str(b))
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes().endswith(b"\n")

    c = tmp_path / "c.geojson"
    write_feature_collection(read_geojson(str(a)), str(c))
    assert c.read_bytes() == a.read_bytes()


def test_city_geojson_components(two_district_doc):
    city = build_city(load_city_config(two_district_doc))
    features = collect_features(city)
    components = [f["properties"]["component"] for f in features]
    assert components[-1] == BOUNDARY
    assert set(components) == {0, 1, BOUNDARY}
    boundary = [f for f in features if f["properties"]["component"] == BOUNDARY]
    assert all(f["properties"]["depth"] is None for f in boundary)
    assert math.fsum(f["properties"]["mass"] for f in features) == pytest.approx(1.0, abs=1e-10)


def test_geojson_rejects_other_documents(tmp_path):
    path = _write(tmp_path, json.dumps({"type": "Feature"}), "x.geojson")
    with pytest.raises(HyperfractalError):
        read_geojson(path)
    with pytest.raises(HyperfractalError):
        collect_features("not a network")


# -------------------------
# Points CSV
# -------------------------

def test_points_csv_empty_is_header_only(tmp_path):
    path = tmp_path / "empty.csv"
    export_points_csv([], str(path))
    assert path.read_text() == ",".join(POINT_COLUMNS) + "\n"


def test_points_csv_grid_points(tmp_path):
    network = build_network(0.5, 6)
    points = sample_points(network, 200, seed=4)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    export_points_csv(points, str(a))
    export_points_csv(sample_points(network, 200, seed=4), str(b))
    assert a.read_bytes() == b.read_bytes()

    df = read_points_csv(str(a))
    assert list(df.columns) == POINT_COLUMNS
    assert len(df) == 200
    assert set(df["origin"]) == {GRID_ORIGIN}
    assert df["depth"].tolist() == [p.depth for p in points]
    assert df["x"].tolist() == pytest.approx([p.x for p in points], abs=1e-12)


def test_points_csv_city_points(tmp_path, two_district_doc):
    city = build_city(load_city_config(two_district_doc))
    points = sample_city(city, 500, seed=3)
    path = str(tmp_path / "city.csv")
    export_points_csv(points, path)
    df = read_points_csv(path)
    assert df["origin"].tolist() == [p.origin for p in points]
    boundary = df[df["origin"] == BOUNDARY]
    assert (boundary["depth"] == -1).all()
    assert (df.loc[df["origin"] != BOUNDARY, "depth"] >= 0).all()


def test_atomic_write_leaves_no_temp_files(tmp_path):
    target = tmp_path / "nested" / "out.txt"
    atomic_write_text(str(target), "a\nb\n")
    assert target.read_bytes() == b"a\nb\n"
    assert [p.name for p in target.parent.iterdir()] == ["out.txt"]


# -------------------------
# SVG rendering
# -------------------------

def test_stroke_width_halves_and_clamps():
    assert stroke_width(0, 4.0) == 4.0
    assert stroke_width(1, 4.0) == 2.0
    assert stroke_width(10, 4.0) == MIN_STROKE_PX


def test_render_network_deterministic(tmp_path):
    network = build_network(0.5, 3)
    points = sample_points(network, 50, seed=1)
    path = tmp_path / "grid.svg"
    svg = render_svg(network, points, path=str(path), width_px=256)
    assert svg == render_svg(network, points, width_px=256)
    assert path.read_text(encoding="utf-8") == svg
    assert svg.lstrip().startswith("<?xml") or svg.lstrip().startswith("<svg")
    assert svg.count("<path") == len(network)
    assert svg.count("<circle") == 50


def test_render_max_draw_depth_hides_segments():
    network = build_network(0.5, 3)
    svg = render_svg(network, max_draw_depth=1)
    assert svg.count("<path") == 2 + 8


def test_render_city_with_theme(two_district_doc):
    city = build_city(load_city_config(two_district_doc))
    svg = render_svg(city, theme=DARK_THEME, width_px=300)
    assert DARK_THEME.background in svg
    n_cells = len(city.diagram.cells)
    assert svg.count("<path") == sum(len(d) for d in city.districts) + len(city.boundary.edges) + n_cells
    assert svg.count("<circle") == len(city.districts)


def test_render_rejects_unknown_objects():
    with pytest.raises(HyperfractalError):
        render_svg(object())
    with pytest.raises(HyperfractalError):
        render_svg(build_network(0.5, 1), width_px=0)
