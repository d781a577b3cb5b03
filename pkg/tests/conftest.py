"""
Shared pytest setup: project root on sys.path, small reusable fixtures.
"""
import sys
from pathlib import Path

import pytest
from hypothesis import settings

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT))


@pytest.fixture
def two_district_doc():
    return {
        "n": 2,
        "p0": 0.2,
        "centers": [[0.25, 0.5], [0.75, 0.5]],
        "lambdas": [1.0, 1.0],
        "ps": [0.5, 0.5],
        "max_depth": 4,
        "seed": 11,
    }


@pytest.fixture
def single_district_doc():
    return {
        "n": 1,
        "p0": 0.0,
        "centers": [[0.5, 0.5]],
        "lambdas": 1.0,
        "ps": 0.5,
        "max_depth": 6,
        "seed": 3,
    }


settings.register_profile("dev", deadline=None)
settings.register_profile("thorough", deadline=None, max_examples=500)
settings.load_profile("dev")
