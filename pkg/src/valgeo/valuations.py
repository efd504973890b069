"""Translation-invariant valuations on polytopes.

Volume, intrinsic volumes (Steiner fitting, with a Kubota Monte-Carlo
estimator as an independent check), mean width, planar mixed volumes and
Firey-type valuations built from a mixed area measure, McMullen
decomposition by scaling, and an empirical monotonicity probe.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from . import sampling
from .geometry import (EMPTY, Body, BodyOrEmpty, GeometryError, ball_approx, convex_hull,
                       minkowski_sum, support_many)


def ball_volume(i: int) -> float:
    """Volume of the closed unit ball in R^i."""
    return math.pi ** (i / 2) / math.gamma(i / 2 + 1)


@dataclass(frozen=True)
class Valuation:
    label: str
    func: Callable[[Body], float] = field(repr=False)
    homogeneity: int | None = None
    monotone_strict_k: int | None = None
    monotone: bool = True

    def __call__(self, k: BodyOrEmpty) -> float:
        if k is EMPTY:
            return 0.0
        return float(self.func(k))

    def __add__(self, other: "Valuation") -> "Valuation":
        return sum_valuation(self, other)


def sum_valuation(*parts: Valuation) -> Valuation:
    degrees = {p.homogeneity for p in parts}
    strict = [p.monotone_strict_k for p in parts if p.monotone_strict_k is not None]
    monotone = all(p.monotone for p in parts)
    return Valuation(
        label="+".join(p.label for p in parts),
        func=lambda k: math.fsum(p(k) for p in parts),
        homogeneity=degrees.pop() if len(degrees) == 1 else None,
        # a strictly monotone valuation plus monotone nonnegative ones stays strict
        monotone_strict_k=min(strict) if strict and monotone else None,
        monotone=monotone,
    )


# -- closed forms ---------------------------------------------------------

def volume(k: BodyOrEmpty) -> float:
    if k is EMPTY:
        return 0.0
    return k.volume


def _facet_areas(k: Body) -> np.ndarray:
    areas = []
    for nrm, idx in zip(k.normals, k.facet_vertex_sets):
        pts = k.vertices[idx]
        if len(pts) < 3:
            areas.append(0.0)
            continue
        _, _, vt = np.linalg.svd(pts - pts.mean(axis=0))
        flat = convex_hull((pts - pts.mean(axis=0)) @ vt[:2].T)
        areas.append(flat.volume)
    return np.array(areas)


def edge_formula_v1(k: Body) -> float:
    """First intrinsic volume of a spatial polytope, exactly.

    Sum over edges of length times external dihedral angle, over ``2 pi``.
    """
    if k.dim != 3:
        raise GeometryError("edge formula is for bodies in R^3")
    v = k.vertices
    if k.affine_dim == 0:
        return 0.0
    if k.affine_dim == 1:
        return float(np.linalg.norm(v[1] - v[0]))
    if k.affine_dim == 2:
        return _flat_perimeter(k) / 2.0
    inc = k._incidence
    total = 0.0
    for i, j in k.edges:
        fs = np.nonzero(inc[i] & inc[j])[0]
        n = k.normals[fs]
        cosines = np.clip(n @ n.T, -1.0, 1.0)
        angle = float(np.arccos(cosines.min()))
        total += float(np.linalg.norm(v[i] - v[j])) * angle
    return total / (2.0 * math.pi)


def _flat_perimeter(k: Body) -> float:
    v = k.vertices
    return float(np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1).sum())


@lru_cache(maxsize=None)
def _reference_ball(n: int, m: int):
    ball = ball_approx(np.zeros(n), 1.0, m)
    if n == 2:
        kappa = [1.0, 2.0, math.pi]
        calibrated = [1.0, ball.boundary_measure / math.pi, ball.volume]
    else:
        kappa = [1.0, 2.0, math.pi, 4.0 * math.pi / 3.0]
        calibrated = [1.0, edge_formula_v1(ball) / 2.0, ball.boundary_measure / 4.0, ball.volume]
    return ball, kappa, calibrated


DEFAULT_BALL_RESOLUTION = {2: 256, 3: 4}


@dataclass(frozen=True)
class HomogeneousDecomposition:
    components: dict
    value: float | None = None

    @property
    def total(self) -> float:
        return math.fsum(self.components.values())

    def __getitem__(self, i):
        return self.components[i]

    def to_dict(self) -> dict:
        return {"components": {str(i): v for i, v in self.components.items()}, "value": self.value}


def _distinct_radii(radii, need):
    r = np.asarray(sorted(float(x) for x in radii))
    if len(r) < need:
        raise GeometryError(f"need at least {need} radii, got {len(r)}")
    if np.any(r <= 0):
        raise GeometryError("radii must be positive")
    if np.any(np.diff(r) <= 0):
        raise GeometryError("singular fit: duplicate radii")
    return r


def steiner_fit(k: Body, radii=None, m: int | None = None,
                calibrate: bool | None = None) -> HomogeneousDecomposition:
    """Intrinsic volumes ``V_0..V_n`` from the parallel-volume polynomial.

    ``Vol(K + rB) = sum_j kappa_j V_{n-j}(K) r^j`` is fitted at the given radii
    (default ``0.05 j`` times the largest coordinate extent of ``K``) with
    ``B`` replaced by :func:`ball_approx`.  In space the inscribed
    icosphere biases the mixed terms, so by default its own intrinsic volumes
    stand in for the ball constants (``calibrate``).
    """
    n = k.dim
    if radii is None:
        # scaled with the body so that V_i(tK) = t^i V_i(K) holds exactly
        extent = float(np.ptp(k.vertices, axis=0).max()) or 1.0
        radii = [0.05 * j * extent for j in range(1, n + 2)]
    r = _distinct_radii(radii, n + 1)
    if m is None:
        m = DEFAULT_BALL_RESOLUTION[n]
    if calibrate is None:
        calibrate = n == 3
    ball, kappa, calibrated = _reference_ball(n, m)
    consts = calibrated if calibrate else kappa
    vols = np.array([minkowski_sum(k, ball.scale_by(x)).volume for x in r])
    vander = np.vander(r, n + 1, increasing=True)
    coef, *_ = np.linalg.lstsq(vander, vols, rcond=None)
    comps = {n - j: float(coef[j] / consts[j]) for j in range(n + 1)}
    return HomogeneousDecomposition(dict(sorted(comps.items())))


def intrinsic_volume(k: BodyOrEmpty, i: int) -> float:
    if k is EMPTY:
        return 0.0
    n = k.dim
    if not 0 <= i <= n:
        raise GeometryError(f"intrinsic volume index {i} outside 0..{n}")
    if i == n:
        return k.volume
    if i == n - 1:
        return 0.5 * k.boundary_measure
    if i == 0:
        return 1.0
    return steiner_fit(k)[i]


def mean_width(k: BodyOrEmpty) -> float:
    if k is EMPTY:
        return 0.0
    n = k.dim
    # W = 2 kappa_{n-1} / (n kappa_n) * V_1
    return 2.0 * ball_volume(n - 1) / (n * ball_volume(n)) * intrinsic_volume(k, 1)


# -- Kubota -----------------------------------------------------------------

def _projection_volumes(k: Body, i: int, frames: np.ndarray, facet_areas) -> np.ndarray:
    v = k.vertices
    if i == 1:
        proj = v @ frames[:, 0, :].T
        return proj.max(axis=0) - proj.min(axis=0)
    # i == 2 in R^3: shadow area on the plane of the frame (Cauchy)
    u = np.cross(frames[:, 0, :], frames[:, 1, :])
    return 0.5 * np.abs(u @ k.normals.T) @ facet_areas


def kubota_estimate(k: Body, i: int, samples: int = 100_000, seed: int = 0,
                    chunk: int = 10_000, workers: int = 1):
    """Monte-Carlo average of projection volumes over random ``i``-subspaces.

    Returns ``(estimate, standard_error)``.  Samples are drawn in fixed-size
    chunks from spawned seed streams and reduced in chunk order, so the
    result does not depend on ``workers``.
    """
    n = k.dim
    if not 1 <= i <= n - 1:
        raise GeometryError(f"Kubota index {i} outside 1..{n - 1}")
    if not k.is_full_dimensional:
        raise GeometryError("Kubota estimate needs a full-dimensional body")
    const = math.comb(n, i) * ball_volume(n) / (ball_volume(i) * ball_volume(n - i))
    areas = _facet_areas(k) if i == 2 else None
    sizes = [chunk] * (samples // chunk) + ([samples % chunk] if samples % chunk else [])
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))

    def run(job):
        size, ss = job
        rng = np.random.default_rng(ss)
        g = rng.standard_normal((size, n, i))
        q, r = np.linalg.qr(g)
        frames = np.transpose(q * np.sign(np.diagonal(r, axis1=1, axis2=2))[:, None, :], (0, 2, 1))
        vals = _projection_volumes(k, i, frames, areas)
        return math.fsum(vals), math.fsum(vals * vals)

    jobs = list(zip(sizes, seeds))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, jobs))
    else:
        parts = [run(j) for j in jobs]
    s1 = math.fsum(p[0] for p in parts)
    s2 = math.fsum(p[1] for p in parts)
    mean = s1 / samples
    var = max(s2 / samples - mean * mean, 0.0) * samples / max(samples - 1, 1)
    return const * mean, const * math.sqrt(var / samples)


# -- planar mixed volumes and Firey valuations ---------------------------------

def mixed_volume_2d(k: Body, g: Body) -> float:
    if k.dim != 2 or g.dim != 2:
        raise GeometryError("mixed_volume_2d needs planar bodies")
    return 0.5 * (minkowski_sum(k, g).volume - k.volume - g.volume)


@dataclass(frozen=True)
class MixedAreaMeasure2D:
    """Discrete measure on the unit circle: atoms at ``normals`` with ``weights``."""

    normals: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        u = np.atleast_2d(np.asarray(self.normals, dtype=float))
        w = np.asarray(self.weights, dtype=float).ravel()
        if len(w) == 0:
            raise GeometryError("empty atom list")
        if u.shape != (len(w), 2):
            raise GeometryError("normals must be an (m, 2) array matching the weights")
        if np.any(w <= 0):
            raise GeometryError("atom weights must be positive")
        u = u / np.linalg.norm(u, axis=1, keepdims=True)
        if np.linalg.norm(w @ u) > 1e-8 * max(1.0, w.sum()):
            raise GeometryError("measure is not closed: sum of w_j u_j != 0")
        object.__setattr__(self, "normals", u)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_polygon(cls, g: Body) -> "MixedAreaMeasure2D":
        """Length measure of a planar polygon or segment."""
        if g.dim != 2:
            raise GeometryError("length measure needs a planar body")
        if g.affine_dim == 0:
            raise GeometryError("empty atom list")
        if g.affine_dim == 1:
            d = g.vertices[1] - g.vertices[0]
            nrm = np.array([d[1], -d[0]]) / np.linalg.norm(d)
            length = float(np.linalg.norm(d))
            return cls(np.array([nrm, -nrm]), np.array([length, length]))
        v = g.vertices
        lengths = np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1)
        return cls(g.normals, lengths)

    @classmethod
    def uniform(cls, m: int = 256) -> "MixedAreaMeasure2D":
        """Length measure of the inscribed regular ``m``-gon: the measure of ``V_1``."""
        return cls.from_polygon(ball_approx(np.zeros(2), 1.0, m))

    def integrate(self, values) -> float:
        return float(np.asarray(values) @ self.weights)


def firey_valuation(measure: MixedAreaMeasure2D, label: str = "firey") -> Valuation:
    """``K -> (1/2) sum_j h_K(u_j) w_j``: monotone and 1-homogeneous."""
    def func(k: Body) -> float:
        return 0.5 * measure.integrate(support_many(k, measure.normals))

    return Valuation(label, func, homogeneity=1)


# -- standard valuations ----------------------------------------------------

def volume_valuation(n: int) -> Valuation:
    return Valuation("vol", volume, homogeneity=n, monotone_strict_k=n)


def intrinsic_volume_valuation(i: int, n: int) -> Valuation:
    if not 1 <= i <= n:
        raise GeometryError(f"intrinsic volume index {i} outside 1..{n}")
    strict = 1 if i == 1 else n
    return Valuation(f"v{i}", lambda k: intrinsic_volume(k, i), homogeneity=i,
                     monotone_strict_k=strict)


def mean_width_valuation(n: int) -> Valuation:
    return Valuation("meanwidth", mean_width, homogeneity=1, monotone_strict_k=1)


# -- McMullen decomposition -------------------------------------------------------

def mcmullen_decompose(phi: Valuation, k: Body, force_zero_constant: bool | None = None
                       ) -> HomogeneousDecomposition:
    """Homogeneous components ``phi_i(K)`` from ``phi(tK) = sum_i t^i phi_i(K)``.

    When ``phi`` is flagged strictly monotone the degree-0 part is fixed at 0
    and only the dilates ``t = 1..n`` are used.
    """
    n = k.dim
    if force_zero_constant is None:
        force_zero_constant = phi.monotone_strict_k is not None
    degrees = list(range(1, n + 1)) if force_zero_constant else list(range(n + 1))
    ts = np.arange(1, len(degrees) + 1, dtype=float)
    values = np.array([phi(k.scale_by(t)) for t in ts])
    system = ts[:, None] ** np.array(degrees)[None, :]
    sol = np.linalg.solve(system, values)
    comps = {d: float(x) for d, x in zip(degrees, sol)}
    if force_zero_constant:
        comps = {0: 0.0, **comps}
    return HomogeneousDecomposition(comps, value=float(values[0]))


# -- monotonicity ------------------------------------------------------------

@dataclass
class ProbeReport:
    label: str
    k: int
    trials: int
    gaps: list
    min_gap: float
    passed: bool

    def to_dict(self) -> dict:
        return {"label": self.label, "k": self.k, "trials": self.trials,
                "min_gap": self.min_gap, "passed": self.passed}


def monotonicity_probe(phi: Valuation, trials: int, k: int, seed: int = 0, n: int = 2) -> ProbeReport:
    """Check ``phi(K) < phi(L)`` on random strictly nested pairs of affine dimension ``k``."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    rng = np.random.default_rng(seed)
    gaps = []
    for _ in range(trials):
        inner, outer = sampling.random_nested_pair(rng, n, k)
        gaps.append(phi(outer) - phi(inner))
    low = min(gaps)
    return ProbeReport(phi.label, k, trials, gaps, low, low > 0)


# -- spec strings --------------------------------------------------------------

def valuation_from_spec(spec: str, n: int) -> Valuation:
    """Parse ``vol | v1 | v2 | v3 | meanwidth | firey:<polygon.json> | sum:<spec>+<spec>``."""
    spec = spec.strip()
    if spec.startswith("sum:"):
        parts = [p for p in spec[4:].split("+") if p]
        if len(parts) < 2:
            raise ValueError(f"sum needs at least two terms: {spec!r}")
        return sum_valuation(*(valuation_from_spec(p, n) for p in parts))
    if spec.startswith("firey:"):
        from .geometry import load_body
        if n != 2:
            raise ValueError("firey valuations are planar")
        g = load_body(spec[6:])
        return firey_valuation(MixedAreaMeasure2D.from_polygon(g), label=f"firey[{spec[6:]}]")
    if spec == "vol":
        return volume_valuation(n)
    if spec == "meanwidth":
        return mean_width_valuation(n)
    if len(spec) == 2 and spec[0] == "v" and spec[1].isdigit():
        return intrinsic_volume_valuation(int(spec[1]), n)
    raise ValueError(f"unknown valuation spec {spec!r}")
