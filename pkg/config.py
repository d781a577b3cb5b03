"""
config.py - Settings, logging setup, seeded RNG streams and city config / preset files
"""

import os
import json
import logging
from typing import Any, Dict, List, Union

import numpy as np
from rich.console import Console
from rich.logging import RichHandler

from errors import ConfigError, ParameterError

logger = logging.getLogger(__name__)

# --- GLOBAL DEFINITIONS ---
PRESET_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "city_presets")
DEFAULT_MAX_DEPTH_BUDGET = 12
DEFAULT_SEGMENT_BUDGET = 2 * (4 ** (DEFAULT_MAX_DEPTH_BUDGET + 1) - 1) // 3
COORD_DECIMALS = 12
SAMPLE_CHUNK = 65536
DEFAULT_N_JOBS = 1
DEFAULT_SKIP_HEAD = 3
DEFAULT_MAX_REJECTS = 10000
DEFAULT_WIDTH_PX = 512
PROB_SUM_TOL = 1e-12

# RNG stream identifiers (first element of the SeedSequence spawn key)
STREAM_CENTERS = 0
STREAM_SAMPLES = 2

SEED_LIMIT = 2 ** 64

CITY_KEYS = {"n", "p0", "lambdas", "ps", "max_depth", "seed", "centers", "gaussian"}
GAUSSIAN_KEYS = {"mean", "covariance", "seed", "max_rejects"}


# -------------------------
# Logging
# -------------------------

def setup_logging(level: Union[int, str] = logging.INFO) -> None:
    """Route all diagnostics to stderr through a single rich handler."""
    handler = RichHandler(
        console=Console(stderr=True),
        show_path=False,
        rich_tracebacks=False,
        log_time_format='%Y-%m-%d %H:%M:%S',
    )
    handler.setFormatter(logging.Formatter('%(message)s'))
    root = logging.getLogger()
    for old in list(root.handlers):
        root.removeHandler(old)
    root.addHandler(handler)
    root.setLevel(level)


# -------------------------
# Seeded RNG streams
# -------------------------

def check_seed(seed: Any) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise ParameterError(f"seed must be an integer, got {seed!r}")
    seed = int(seed)
    if not 0 <= seed < SEED_LIMIT:
        raise ParameterError(f"seed must lie in [0, 2^64), got {seed}")
    return seed


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """
    Deterministic generator for one substream of a master seed.

    PCG64 seeded by SeedSequence(entropy=seed, spawn_key=stream); identical
    (seed, stream) pairs give identical draws on every platform.
    """
    seq = np.random.SeedSequence(entropy=check_seed(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.PCG64(seq))


def chunk_bounds(n: int, chunk: int = SAMPLE_CHUNK) -> List[tuple]:
    """Fixed (start, stop) index ranges; independent of the worker count."""
    return [(start, min(start + chunk, n)) for start in range(0, n, chunk)]


# -------------------------
# Preset Management
# -------------------------

def save_preset(preset_name: str, doc: Dict, preset_dir: str = PRESET_DIR) -> str:
    """Save a city config document as a named preset"""
    os.makedirs(preset_dir, exist_ok=True)
    filename = os.path.join(preset_dir, f"{preset_name}.json")
    with open(filename, 'w') as f:
        json.dump(doc, f, indent=4, sort_keys=True)
    logger.info("Preset '%s' saved to %s", preset_name, filename)
    return filename


def load_preset(preset_name: str, preset_dir: str = PRESET_DIR) -> Dict:
    """Load a named preset document"""
    filename = os.path.join(preset_dir, f"{preset_name}.json")
    if not os.path.exists(filename):
        raise ConfigError(f"preset '{preset_name}' not found in {preset_dir}")
    try:
        with open(filename, 'r') as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"preset '{preset_name}' is not valid JSON: {e}") from e


def get_available_presets(preset_dir: str = PRESET_DIR) -> List[str]:
    """Get sorted list of available presets"""
    if not os.path.exists(preset_dir):
        return []
    return sorted(f[:-len('.json')] for f in os.listdir(preset_dir) if f.endswith('.json'))


# -------------------------
# City config documents
# -------------------------

def _as_float_list(value: Any, n: int, key: str) -> List[float]:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return [float(value)] * n
    if not isinstance(value, list) or len(value) != n:
        raise ConfigError(f"'{key}' must be a number or a list of {n} numbers")
    try:
        return [float(v) for v in value]
    except (TypeError, ValueError) as e:
        raise ConfigError(f"'{key}' contains a non-numeric entry: {e}") from e


def _as_pair(value: Any, key: str) -> tuple:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(f"'{key}' must be a pair [x, y], got {value!r}")
    try:
        return float(value[0]), float(value[1])
    except (TypeError, ValueError) as e:
        raise ConfigError(f"'{key}' is not numeric: {e}") from e


def load_city_config(source: Union[str, Dict]):
    """
    Validate a CityConfigFile and return a city.CityConfig.

    `source` is a dict, a path to a JSON file, or the name of a preset.
    Unknown keys are rejected.
    """
    from city import CityConfig, GaussianCenters  # local import: city imports config
    from geometry import CovarianceSpec, Point2

    if not isinstance(source, str):
        doc = source
    elif os.path.exists(source):
        try:
            with open(source, 'r') as f:
                doc = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{source} is not valid JSON: {e}") from e
    else:
        doc = load_preset(source)

    if not isinstance(doc, dict):
        raise ConfigError("city config must be a JSON object")
    unknown = set(doc) - CITY_KEYS
    if unknown:
        raise ConfigError(f"unknown keys in city config: {sorted(unknown)}")
    for key in ("n", "max_depth", "seed"):
        if key not in doc:
            raise ConfigError(f"missing required key '{key}'")
        if isinstance(doc[key], bool) or not isinstance(doc[key], int):
            raise ConfigError(f"'{key}' must be an integer")
    if ("centers" in doc) == ("gaussian" in doc):
        raise ConfigError("exactly one of 'centers' or 'gaussian' is required")

    n = doc["n"]
    if n < 1:
        raise ConfigError(f"'n' must be >= 1, got {n}")

    if "centers" in doc:
        raw = doc["centers"]
        if not isinstance(raw, list) or len(raw) != n:
            raise ConfigError(f"'centers' must list {n} coordinate pairs")
        center_source = [Point2(*_as_pair(c, "centers")) for c in raw]
    else:
        g = doc["gaussian"]
        if not isinstance(g, dict):
            raise ConfigError("'gaussian' must be an object")
        unknown = set(g) - GAUSSIAN_KEYS
        if unknown:
            raise ConfigError(f"unknown keys in 'gaussian': {sorted(unknown)}")
        if "covariance" not in g or "seed" not in g:
            raise ConfigError("'gaussian' requires 'covariance' and 'seed'")
        cov = g["covariance"]
        if (not isinstance(cov, list) or len(cov) != 2
                or any(not isinstance(row, list) or len(row) != 2 for row in cov)):
            raise ConfigError("'covariance' must be a 2x2 nested list")
        if float(cov[0][1]) != float(cov[1][0]):
            raise ConfigError("'covariance' must be symmetric")
        center_source = GaussianCenters(
            mean=Point2(*_as_pair(g.get("mean", [0.5, 0.5]), "mean")),
            cov=CovarianceSpec(float(cov[0][0]), float(cov[0][1]), float(cov[1][1])),
            seed=check_seed(g["seed"]),
            max_rejects=int(g.get("max_rejects", DEFAULT_MAX_REJECTS)),
        )

    return CityConfig(
        n=n,
        p0=float(doc.get("p0", 0.0)),
        center_source=center_source,
        lambdas=_as_float_list(doc.get("lambdas", 1.0), n, "lambdas"),
        ps=_as_float_list(doc.get("ps", 0.5), n, "ps"),
        max_depth=doc["max_depth"],
        seed=check_seed(doc["seed"]),
    )


def dump_city_config(config) -> Dict:
    """Inverse of load_city_config: a JSON-ready CityConfigFile document"""
    from city import GaussianCenters

    doc = {
        "n": config.n,
        "p0": config.p0,
        "lambdas": list(config.lambdas),
        "ps": list(config.ps),
        "max_depth": config.max_depth,
        "seed": config.seed,
    }
    source = config.center_source
    if isinstance(source, GaussianCenters):
        doc["gaussian"] = {
            "mean": [source.mean.x, source.mean.y],
            "covariance": [[source.cov.sxx, source.cov.sxy], [source.cov.sxy, source.cov.syy]],
            "seed": source.seed,
            "max_rejects": source.max_rejects,
        }
    else:
        doc["centers"] = [[c.x, c.y] for c in source]
    return doc
