"""
measure.py - Closed-form dimensions of self-similar and hyperfractal measures

Natural logarithms throughout; every formula is a ratio of logs, so the base
never matters.
"""

import math
import logging
from dataclasses import dataclass
from typing import Sequence, Tuple

from config import PROB_SUM_TOL
from errors import ParameterError

logger = logging.getLogger(__name__)

# Dimension of the planar support every street network lives on
PLANAR_DIMENSION = 2.0

DimensionValue = float


# -------------------------
# Measure descriptions
# -------------------------

@dataclass(frozen=True)
class ContractionSystem:
    """Contraction ratios lambda_i with their probability weights p_i."""

    ratios: Tuple[float, ...]
    probabilities: Tuple[float, ...]

    def __post_init__(self):
        ratios = tuple(float(r) for r in self.ratios)
        probs = tuple(float(p) for p in self.probabilities)
        object.__setattr__(self, "ratios", ratios)
        object.__setattr__(self, "probabilities", probs)

        if not ratios or not probs:
            raise ParameterError("contraction system needs at least one map")
        if len(ratios) != len(probs):
            raise ParameterError(
                f"ratios ({len(ratios)}) and probabilities ({len(probs)}) differ in length"
            )
        bad = [r for r in ratios if not 0.0 < r < 1.0]
        if bad:
            raise ParameterError(f"contraction ratios must lie in (0,1), got {bad}")
        bad = [p for p in probs if not 0.0 < p <= 1.0]
        if bad:
            raise ParameterError(f"probabilities must lie in (0,1], got {bad}")
        total = math.fsum(probs)
        if abs(total - 1.0) > PROB_SUM_TOL:
            raise ParameterError(f"probabilities must sum to 1, got {total!r}")


@dataclass(frozen=True)
class UniformSelfSimilarSpec:
    """Step-n segments of length c*s^n carrying mass m0*r^n each."""

    s: float
    r: float
    c: float = 1.0
    m0: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.s < 1.0:
            raise ParameterError(f"length scaling s must lie in (0,1), got {self.s}")
        if self.r <= 0.0:
            raise ParameterError(f"mass scaling r must be > 0, got {self.r}")
        if self.c <= 0.0:
            raise ParameterError(f"initial length c must be > 0, got {self.c}")
        if self.m0 <= 0.0:
            raise ParameterError(f"initial mass m0 must be > 0, got {self.m0}")

    def length(self, n: int) -> float:
        return self.c * self.s ** n

    def mass(self, n: int) -> float:
        return self.m0 * self.r ** n


# -------------------------
# Dimension calculators
# -------------------------

def ifs_dimension(system: ContractionSystem) -> DimensionValue:
    """Entropy over Lyapunov exponent of a self-similar measure."""
    entropy = math.fsum(p * math.log(1.0 / p) for p in system.probabilities)
    if entropy == 0.0:
        return 0.0
    lyapunov = math.fsum(
        p * math.log(1.0 / lam) for p, lam in zip(system.probabilities, system.ratios)
    )
    return entropy / lyapunov


def uniform_ss_dimension(spec: UniformSelfSimilarSpec) -> DimensionValue:
    """Almost-everywhere local dimension log_s(r) of a uniform self-similar measure."""
    return math.log(spec.r) / math.log(spec.s)


def _check_unit_interval(p: float, name: str = "p") -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"{name} must lie in [0,1], got {p}")
    return p


def manhattan_dimension(p: float) -> DimensionValue:
    """ln(4/q)/ln 2 with q = 1 - p; +inf at p = 1."""
    p = _check_unit_interval(p)
    if p == 1.0:
        return math.inf
    return math.log(4.0 / (1.0 - p)) / math.log(2.0)


def nu_exponent(p: float) -> float:
    """Rank-curve exponent ln(q/2)/ln 2 = 1 - manhattan_dimension(p)."""
    p = float(p)
    if not 0.0 < p < 1.0:
        raise ParameterError(f"p must lie in (0,1), got {p}")
    return 1.0 - manhattan_dimension(p)


def dimension_from_rank_exponent(exponent: float) -> DimensionValue:
    # nu(xi) ~ xi^(1 - dim)
    return 1.0 - exponent


def is_hyperfractal(dim: DimensionValue) -> bool:
    """True when the measure dimension exceeds that of its planar support."""
    return dim > PLANAR_DIMENSION


def contraction_system(ratios: Sequence[float], probabilities: Sequence[float]) -> ContractionSystem:
    return ContractionSystem(tuple(ratios), tuple(probabilities))
