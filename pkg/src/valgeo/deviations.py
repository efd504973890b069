"""Meet and join deviations built from a valuation, plus semimetric diagnostics."""
from __future__ import annotations

import math

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import Body, BodyOrEmpty, hausdorff_distance, hull_union, intersect
from .valuations import Valuation


def meet_deviation(phi: Valuation, k: Body, l: Body) -> float:
    """``phi(K) + phi(L) - 2 phi(K ∩ L)``."""
    return math.fsum([phi(k), phi(l), -2.0 * phi(intersect(k, l))])


def join_deviation(phi: Valuation, k: Body, l: Body) -> float:
    """``2 phi(conv(K ∪ L)) - phi(K) - phi(L)``."""
    return math.fsum([2.0 * phi(hull_union(k, l)), -phi(k), -phi(l)])


@dataclass(frozen=True)
class Deviation:
    kind: str
    phi: Valuation

    def __post_init__(self):
        if self.kind not in ("meet", "join"):
            raise ValueError(f"deviation kind must be 'meet' or 'join', got {self.kind!r}")

    def __call__(self, k: BodyOrEmpty, l: BodyOrEmpty) -> float:
        if self.kind == "meet":
            return meet_deviation(self.phi, k, l)
        return join_deviation(self.phi, k, l)

    @property
    def label(self) -> str:
        return f"{self.kind}[{self.phi.label}]"


@dataclass
class SemimetricReport:
    label: str
    trials: int
    symmetric: bool
    min_value: float
    min_distinct_value: float
    distinct_pairs: int
    passed: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def semimetric_check(dev: Deviation, pairs: Callable, trials: int, seed: int = 0,
                     hausdorff_floor: float = 1e-3) -> SemimetricReport:
    """Symmetry, nonnegativity, and positivity on distinct sampled pairs.

    ``pairs`` maps a numpy Generator to a pair of bodies.
    """
    rng = np.random.default_rng(seed)
    symmetric = True
    low = np.inf
    low_distinct = np.inf
    distinct = 0
    for _ in range(trials):
        k, l = pairs(rng)
        forward, backward = dev(k, l), dev(l, k)
        symmetric &= forward == backward
        low = min(low, forward)
        if hausdorff_distance(k, l) > hausdorff_floor:
            distinct += 1
            low_distinct = min(low_distinct, forward)
    passed = bool(symmetric and low >= -1e-9 and (distinct == 0 or low_distinct > 0))
    return SemimetricReport(dev.label, trials, bool(symmetric), float(low), float(low_distinct),
                            distinct, passed)


def triangle_violation(dev: Deviation, k: Body, m: Body, l: Body) -> float:
    """``dev(K, L) - dev(K, M) - dev(M, L)``; positive means the triangle inequality fails."""
    return dev(k, l) - dev(k, m) - dev(m, l)


def max_triangle_violation(dev: Deviation, triples: Callable, trials: int, seed: int = 0):
    """Largest violation over sampled triples, with the worst triple."""
    rng = np.random.default_rng(seed)
    worst, worst_triple = -np.inf, None
    for _ in range(trials):
        k, m, l = triples(rng)
        v = triangle_violation(dev, k, m, l)
        if v > worst:
            worst, worst_triple = v, (k, m, l)
    return float(worst), worst_triple
