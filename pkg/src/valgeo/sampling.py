"""Seeded random bodies and body pairs."""
from __future__ import annotations

import numpy as np

from .geometry import DEFAULT_TOL, Body, convex_hull


def random_frame(rng: np.random.Generator, n: int, k: int) -> np.ndarray:
    """``k`` orthonormal rows in R^n, Haar distributed."""
    q, r = np.linalg.qr(rng.standard_normal((n, k)))
    return (q * np.sign(np.diag(r))).T


def random_body(rng: np.random.Generator, n: int, k: int | None = None, npoints=(10, 20),
                lo: float = 0.0, hi: float = 1.0, tol=DEFAULT_TOL) -> Body:
    """Hull of 10-20 uniform points of a box, or of a random ``k``-flat through it."""
    m = int(rng.integers(npoints[0], npoints[1] + 1))
    if k is None or k == n:
        pts = rng.uniform(lo, hi, size=(m, n))
    else:
        center = rng.uniform(lo, hi, size=n)
        frame = random_frame(rng, n, k)
        half = 0.5 * (hi - lo)
        pts = center + rng.uniform(-half, half, size=(m, k)) @ frame
    return convex_hull(pts, tol=tol)


def random_nested_pair(rng: np.random.Generator, n: int, k: int | None = None):
    """A strictly nested pair ``K`` inside ``L``: ``K = c + s (L - c)``, ``s`` in [0.3, 0.9]."""
    outer = random_body(rng, n, k)
    c = outer.centroid
    s = rng.uniform(0.3, 0.9)
    inner = convex_hull(c + s * (outer.vertices - c), tol=outer.tol)
    return inner, outer


def random_pair(rng: np.random.Generator, n: int, spread: float = 1.0):
    """Two full-dimensional random bodies; offsets up to ``spread`` make disjoint pairs common."""
    a = random_body(rng, n)
    b = random_body(rng, n)
    shift = rng.uniform(-spread, spread, size=n)
    return a, b.translate(shift)


def pair_sampler(n: int, spread: float = 1.0):
    def sample(rng):
        return random_pair(rng, n, spread)

    return sample
