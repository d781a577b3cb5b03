"""
exporters.py - Street CSV import/export, GeoJSON and points CSV writers

All writers are deterministic: identical inputs give byte-identical files.
"""

import os
import io
import csv
import json
import logging
import tempfile
from typing import Dict, Iterable, List, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from city import BOUNDARY, CityPoint, FractalCity
from config import COORD_DECIMALS
from errors import CsvFormatError, HyperfractalError
from estimator import StreetRecord
from manhattan import ManhattanNetwork, SamplePoint

logger = logging.getLogger(__name__)

STREET_COLUMNS = ["street_id", "piece_index", "length", "traffic"]
POINT_COLUMNS = ["x", "y", "origin", "depth"]
GRID_ORIGIN = "grid"


# ---------------------------
# File utilities
# ---------------------------

def atomic_write_text(path: str, text: str) -> None:
    """Write text atomically (LF line endings, UTF-8) to avoid half-written outputs"""
    dirpath = os.path.dirname(os.path.abspath(path))
    os.makedirs(dirpath, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(dir=dirpath, prefix=".tmp_export_")
    try:
        with os.fdopen(fd, 'w', encoding='utf-8', newline='\n') as f:
            f.write(text)
        os.replace(tmp_path, path)
    finally:
        if os.path.exists(tmp_path):
            try:
                os.remove(tmp_path)
            except OSError:
                pass


def _coord(value: float) -> float:
    return round(float(value), COORD_DECIMALS) + 0.0


# ---------------------------
# Street CSV
# ---------------------------

def _read_rows(path: str) -> Tuple[List[str], int, List[List[str]], List[int]]:
    """Header, its line, non-blank data rows and the file line each row starts on."""
    with open(path, 'rb') as f:
        raw = f.read()
    try:
        text = raw.decode('utf-8-sig')
    except UnicodeDecodeError as e:
        line = raw[:e.start].count(b"\n") + 1
        raise CsvFormatError(f"not valid UTF-8 ({e.reason})", line=line) from e

    reader = csv.reader(io.StringIO(text, newline=''))
    header = None
    header_line = 1
    rows, lines = [], []
    start = 1
    try:
        for row in reader:
            if row:
                if header is None:
                    header, header_line = row, start
                elif len(row) != len(STREET_COLUMNS):
                    raise CsvFormatError(
                        f"expected {len(STREET_COLUMNS)} fields, got {len(row)}", line=start
                    )
                else:
                    rows.append(row)
                    lines.append(start)
            start = reader.line_num + 1
    except csv.Error as e:
        raise CsvFormatError(f"malformed row: {e}", line=start) from e
    if header is None:
        raise CsvFormatError("file is empty; header row required", line=1)
    return header, header_line, rows, lines


def import_streets_csv(path: str) -> List[StreetRecord]:
    """
    Read `street_id,piece_index,length,traffic` rows into StreetRecords.

    Streets keep the order of their first row; pieces are sorted by
    piece_index and must run 0..m-1 without duplicates. Blank lines are
    skipped.

    Args:
        path: UTF-8 CSV file with a header row

    Returns:
        List of StreetRecord, one per distinct street_id

    Raises:
        CsvFormatError: carrying the file line of the first offending row
    """
    header, header_line, rows, row_lines = _read_rows(path)
    if header != STREET_COLUMNS:
        raise CsvFormatError(f"header must be {','.join(STREET_COLUMNS)}, got {','.join(header)}", line=header_line)

    df = pd.DataFrame(rows, columns=STREET_COLUMNS, dtype=str)
    lines = np.asarray(row_lines, dtype=np.int64)
    piece = pd.to_numeric(df["piece_index"], errors='coerce')
    length = pd.to_numeric(df["length"], errors='coerce')
    traffic = pd.to_numeric(df["traffic"], errors='coerce')

    bad = df["street_id"].eq("") | piece.isna() | length.isna() | traffic.isna() | (piece % 1 != 0)
    if bad.any():
        i = int(np.flatnonzero(bad.to_numpy())[0])
        raise CsvFormatError(f"malformed row {df.iloc[i].tolist()}", line=int(lines[i]))
    for name, values, rule in (("length", length, length <= 0), ("traffic", traffic, traffic < 0),
                               ("piece_index", piece, piece < 0)):
        if rule.any():
            i = int(np.flatnonzero(rule.to_numpy())[0])
            raise CsvFormatError(f"invalid {name} {values.iloc[i]}", line=int(lines[i]))

    frame = pd.DataFrame({
        "street_id": df["street_id"], "piece_index": piece.astype(np.int64),
        "length": length.astype(float), "traffic": traffic.astype(float), "line": lines,
    })
    dup = frame.duplicated(["street_id", "piece_index"], keep='first')
    if dup.any():
        row = frame[dup].iloc[0]
        raise CsvFormatError(
            f"duplicate piece ({row.street_id}, {row.piece_index})", line=int(row.line)
        )

    streets = []
    for street_id, group in frame.groupby("street_id", sort=False):
        group = group.sort_values("piece_index", kind='stable')
        if not np.array_equal(group["piece_index"].to_numpy(), np.arange(len(group))):
            raise CsvFormatError(f"street {street_id}: piece indices must run 0..{len(group) - 1}")
        streets.append(StreetRecord(street_id, group["length"].to_numpy(), group["traffic"].to_numpy()))
    logger.info("Imported %d streets (%d pieces) from %s", len(streets), len(frame), path)
    return streets


def export_streets_csv(streets: Iterable[StreetRecord], path: str) -> None:
    """Write streets in the import schema with round-trip exact decimals"""
    buf = io.StringIO()
    buf.write(",".join(STREET_COLUMNS) + "\n")
    for street in streets:
        for k, (length, traffic) in enumerate(zip(street.lengths.tolist(), street.traffic.tolist())):
            buf.write(f"{street.street_id},{k},{length!r},{traffic!r}\n")
    atomic_write_text(path, buf.getvalue())


# ---------------------------
# GeoJSON
# ---------------------------

def _feature(coords, depth, mass, density, component) -> Dict:
    return {
        "type": "Feature",
        "geometry": {"type": "LineString", "coordinates": [[_coord(x), _coord(y)] for x, y in coords]},
        "properties": {
            "component": component,
            "depth": depth,
            "linear_density": density,
            "mass": mass,
        },
    }


def _sort_key(feature: Dict):
    props = feature["properties"]
    (x0, y0), (x1, y1) = feature["geometry"]["coordinates"][0], feature["geometry"]["coordinates"][-1]
    boundary = props["component"] == BOUNDARY
    component = (1, 0) if boundary else (0, props["component"])
    depth = -1 if props["depth"] is None else props["depth"]
    if abs(x1 - x0) <= abs(y1 - y0):
        offset, start, axis = x0, min(y0, y1), 0
    else:
        offset, start, axis = y0, min(x0, x1), 1
    return component, depth, offset, start, axis, x0, y0


def network_features(network: ManhattanNetwork) -> List[Dict]:
    x0, y0, x1, y1 = network.endpoints()
    masses = network.masses
    density = masses / network.lengths
    return [
        _feature(((a, b), (c, d)), int(k), float(m), float(rho), 0)
        for a, b, c, d, k, m, rho in zip(x0.tolist(), y0.tolist(), x1.tolist(), y1.tolist(),
                                          network.depths.tolist(), masses.tolist(), density.tolist())
    ]


def city_features(city: FractalCity) -> List[Dict]:
    features = []
    for district in city.districts:
        density = district.linear_densities
        for s, e, k, m, rho in zip(district.starts.tolist(), district.ends.tolist(),
                                   district.depths.tolist(), district.masses.tolist(), density.tolist()):
            features.append(_feature((s, e), int(k), float(m), float(rho), district.index))
    rho = city.boundary.linear_density
    for edge in city.boundary.edges:
        seg = edge.segment
        features.append(_feature((seg.start.as_tuple(), seg.end.as_tuple()), None,
                                 float(edge.length * rho), float(rho), BOUNDARY))
    return features


def collect_features(obj: Union[ManhattanNetwork, FractalCity]) -> List[Dict]:
    if isinstance(obj, ManhattanNetwork):
        features = network_features(obj)
    elif isinstance(obj, FractalCity):
        features = city_features(obj)
    else:
        raise HyperfractalError(f"cannot export {type(obj).__name__} as GeoJSON")
    return sorted(features, key=_sort_key)


def write_feature_collection(features: Sequence[Dict], path: str) -> None:
    doc = {"type": "FeatureCollection", "features": list(features)}
    atomic_write_text(path, json.dumps(doc, separators=(",", ":"), sort_keys=True) + "\n")


def export_geojson(obj: Union[ManhattanNetwork, FractalCity], path: str) -> None:
    """FeatureCollection of LineStrings ordered by (component, depth, line offset, span start)"""
    features = collect_features(obj)
    write_feature_collection(features, path)
    logger.info("Wrote %d GeoJSON features to %s", len(features), path)


def read_geojson(path: str) -> List[Dict]:
    with open(path, 'r', encoding='utf-8') as f:
        doc = json.load(f)
    if doc.get("type") != "FeatureCollection":
        raise HyperfractalError(f"{path} is not a FeatureCollection")
    return doc["features"]


# ---------------------------
# Points CSV
# ---------------------------

def _point_row(point) -> tuple:
    if isinstance(point, CityPoint):
        depth = -1 if point.depth is None else point.depth
        return point.location.x, point.location.y, point.origin, depth
    if isinstance(point, SamplePoint):
        return point.x, point.y, GRID_ORIGIN, point.depth
    raise HyperfractalError(f"cannot export {type(point).__name__} as a point row")


def export_points_csv(points: Sequence[Union[SamplePoint, CityPoint]], path: str) -> None:
    """`x,y,origin,depth` rows, input order, 12 decimal digits; boundary points have depth -1"""
    buf = io.StringIO()
    buf.write(",".join(POINT_COLUMNS) + "\n")
    fmt = f"{{:.{COORD_DECIMALS}f}}"
    for point in points:
        x, y, origin, depth = _point_row(point)
        buf.write(f"{fmt.format(x)},{fmt.format(y)},{origin},{depth}\n")
    atomic_write_text(path, buf.getvalue())
    logger.info("Wrote %d points to %s", len(points), path)


def read_points_csv(path: str) -> pd.DataFrame:
    return pd.read_csv(path, dtype={"origin": str})
