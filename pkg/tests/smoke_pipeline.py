"""
Smoke test for the generate -> export -> estimate pipeline
Builds a Manhattan grid, writes its street CSV, reads it back and estimates
the dimension; then builds the bundled two-district city and samples it.
"""
import json
import sys
import tempfile
from pathlib import Path

# Ensure project root is on sys.path when running this script directly
ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT))

from city import build_city, city_mass_report, sample_city
from config import load_city_config, setup_logging
from estimator import estimate_dimension, network_to_streets
from exporters import export_points_csv, export_streets_csv, import_streets_csv
from manhattan import TruncationMode, build_network, segment_table
from measure import manhattan_dimension


def main():
    print("Starting Smoke Test: pipeline")
    setup_logging("WARNING")
    p, depth = 0.5, 8

    network = build_network(p, depth, TruncationMode.RAW)
    print(segment_table(network).to_string(index=False))

    with tempfile.TemporaryDirectory() as tmp:
        streets_path = str(Path(tmp) / "manhattan.csv")
        export_streets_csv(network_to_streets(network), streets_path)
        streets = import_streets_csv(streets_path)
        print(f"Round-tripped {len(streets)} streets through {streets_path}")

        estimate = estimate_dimension(streets, 1.000001)
        print(json.dumps({
            'closed_form': manhattan_dimension(p),
            'estimated': estimate.value,
            'exponent': estimate.exponent,
            'r_squared': estimate.r_squared,
            'points': estimate.fit.n_points,
        }, indent=2))

        city = build_city(load_city_config("two_districts"))
        print(city_mass_report(city).to_string(index=False))
        points = sample_city(city, 2000, seed=0)
        points_path = str(Path(tmp) / "city_points.csv")
        export_points_csv(points, points_path)
        boundary = sum(1 for pt in points if pt.district is None)
        print(f"Sampled {len(points)} city points ({boundary} on boundary roads)")


if __name__ == '__main__':
    main()
