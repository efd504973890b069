"""Piecewise Minkowski-interpolation paths and their deviation lengths.

A path is a chain of segments ``t -> (1 - t) A + t B``.  Lengths are
partition sums refined dyadically; segments with nested endpoints have the
closed form ``|phi(A) - phi(B)|``.  The builders produce the canonical paths
between two bodies: through the hull, through the intersection, through a
thickened intersection, through a thin spheropolyhedral bridge, and through a
bridging body.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .deviations import Deviation
from .geometry import (EMPTY, Body, GeometryError, ball_approx, bodies_equal, body_from_json,
                       convex_hull, hull_union, interpolate, intersect, is_subset, minkowski_sum,
                       segment, support_many)
from .valuations import MixedAreaMeasure2D, Valuation, volume

DEFAULT_PATH_BALL = {2: 64, 3: 2}
EPS_LEN = 1e-7


@dataclass(frozen=True)
class Segment:
    start: Body
    end: Body

    @property
    def monotone_flag(self) -> bool:
        return is_subset(self.start, self.end) or is_subset(self.end, self.start)

    @property
    def is_constant(self) -> bool:
        return bodies_equal(self.start, self.end)

    def at(self, t: float) -> Body:
        return interpolate(self.start, self.end, t)

    def split(self, s: float):
        """Two segments tracing the same curve, meeting at parameter ``s``."""
        mid = self.at(s)
        return Segment(self.start, mid), Segment(mid, self.end)


@dataclass
class Path:
    segments: list
    breakpoints: np.ndarray = None

    def __post_init__(self):
        if not self.segments:
            raise GeometryError("a path needs at least one segment")
        if self.breakpoints is None:
            self.breakpoints = np.arange(len(self.segments) + 1, dtype=float)
        self.breakpoints = np.asarray(self.breakpoints, dtype=float)
        if len(self.breakpoints) != len(self.segments) + 1:
            raise GeometryError("need one more breakpoint than segments")
        if np.any(np.diff(self.breakpoints) <= 0):
            raise GeometryError("breakpoints must be strictly increasing")
        for left, right in zip(self.segments, self.segments[1:]):
            if not bodies_equal(left.end, right.start):
                raise GeometryError("consecutive segments do not share an endpoint")

    @classmethod
    def from_bodies(cls, bodies, breakpoints=None) -> "Path":
        bodies = list(bodies)
        if len(bodies) < 2:
            raise GeometryError("a path needs at least two bodies")
        segs = [Segment(a, b) for a, b in zip(bodies, bodies[1:])]
        return cls(segs, breakpoints)

    @classmethod
    def from_json(cls, obj) -> "Path":
        if not isinstance(obj, dict) or not isinstance(obj.get("bodies"), list):
            raise GeometryError("path JSON needs a 'bodies' list")
        return cls.from_bodies([body_from_json(b) for b in obj["bodies"]], obj.get("breakpoints"))

    @property
    def bodies(self) -> list:
        return [self.segments[0].start] + [s.end for s in self.segments]

    @property
    def start(self) -> Body:
        return self.segments[0].start

    @property
    def end(self) -> Body:
        return self.segments[-1].end

    def __call__(self, t: float) -> Body:
        p = self.breakpoints
        if not p[0] <= t <= p[-1]:
            raise GeometryError(f"parameter {t} outside [{p[0]}, {p[-1]}]")
        i = min(int(np.searchsorted(p, t, side="right")) - 1, len(self.segments) - 1)
        return self.segments[i].at((t - p[i]) / (p[i + 1] - p[i]))

    def refine(self, points) -> "Path":
        """Same curve with extra breakpoints inserted."""
        segs, bps = list(self.segments), list(self.breakpoints)
        for t in sorted(points):
            i = int(np.searchsorted(bps, t, side="right")) - 1
            if i < 0 or i >= len(segs) or t <= bps[i] or t >= bps[i + 1]:
                continue
            s = (t - bps[i]) / (bps[i + 1] - bps[i])
            left, right = segs[i].split(s)
            segs[i:i + 1] = [left, right]
            bps.insert(i + 1, t)
        return Path(segs, np.array(bps))

    def reparametrize(self, a: float, b: float) -> "Path":
        """Strictly increasing linear reparametrization onto ``[a, b]``."""
        p = self.breakpoints
        q = a + (p - p[0]) * (b - a) / (p[-1] - p[0])
        return Path(list(self.segments), q)

    def concat(self, other: "Path") -> "Path":
        shift = self.breakpoints[-1] - other.breakpoints[0]
        return Path(self.segments + other.segments,
                    np.concatenate([self.breakpoints, other.breakpoints[1:] + shift]))

    def to_json(self) -> dict:
        return {"bodies": [b.to_json() for b in self.bodies], "breakpoints": self.breakpoints.tolist()}


@dataclass
class LengthEstimate:
    value: float
    refinement_depth: int
    converged: bool
    lower_bound_pairs: int
    history: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {"value": self.value, "refinement_depth": self.refinement_depth,
                "converged": self.converged, "lower_bound_pairs": self.lower_bound_pairs}


def partition_sum(seg: Segment, dev: Deviation, depth: int, cache: dict | None = None) -> float:
    """``sum_j dev(gamma(q_{j-1}), gamma(q_j))`` over the dyadic partition of level ``depth``."""
    cache = {} if cache is None else cache
    n = 2 ** depth

    def body(j):
        key = j * (2 ** 30 // n)
        if key not in cache:
            cache[key] = seg.at(j / n)
        return cache[key]

    return math.fsum(dev(body(j - 1), body(j)) for j in range(1, n + 1))


def monotone_segment_length(seg: Segment, phi: Valuation) -> float:
    if not seg.monotone_flag:
        raise GeometryError("non-nested endpoints: closed form does not apply")
    return abs(phi(seg.start) - phi(seg.end))


def segment_length(seg: Segment, dev: Deviation, max_depth: int = 20, eps_len: float = EPS_LEN,
                   verify_depth: int = 2) -> LengthEstimate:
    """Length of one segment as the limit of dyadic partition sums.

    Nested segments return the closed form; their partition sums up to
    ``verify_depth`` are checked against it.  Otherwise refinement stops once
    ``|L_{d+1} - L_d| < eps_len * max(1, L_d)``, or is flagged unconverged at
    ``max_depth``.
    """
    if seg.is_constant:
        return LengthEstimate(0.0, 0, True, 1, [0.0])
    cache: dict = {}
    if dev.phi.monotone and seg.monotone_flag:
        closed = monotone_segment_length(seg, dev.phi)
        history = [partition_sum(seg, dev, d, cache) for d in range(verify_depth + 1)]
        ok = all(abs(h - closed) <= eps_len * max(1.0, closed) for h in history)
        return LengthEstimate(closed, verify_depth, ok, 2 ** verify_depth, history)
    history = [partition_sum(seg, dev, 0, cache)]
    for d in range(1, max_depth + 1):
        history.append(partition_sum(seg, dev, d, cache))
        prev, cur = history[-2], history[-1]
        if abs(cur - prev) < eps_len * max(1.0, prev):
            return LengthEstimate(cur, d, True, 2 ** d, history)
    return LengthEstimate(history[-1], max_depth, False, 2 ** max_depth, history)


def path_length(path: Path, dev: Deviation, **kwargs) -> LengthEstimate:
    parts = [segment_length(s, dev, **kwargs) for s in path.segments]
    return LengthEstimate(
        value=math.fsum(p.value for p in parts),
        refinement_depth=max(p.refinement_depth for p in parts),
        converged=all(p.converged for p in parts),
        lower_bound_pairs=sum(p.lower_bound_pairs for p in parts),
        history=[p.value for p in parts],
    )


# -- builders -----------------------------------------------------------------

def _ball(n: int, r: float, m: int | None) -> Body:
    return ball_approx(np.zeros(n), r, DEFAULT_PATH_BALL[n] if m is None else m)


def build_join_path(k: Body, l: Body) -> Path:
    """``K -> conv(K ∪ L) -> L``."""
    return Path.from_bodies([k, hull_union(k, l), l])


def build_meet_path(k: Body, l: Body) -> Path:
    """``K -> K ∩ L -> L``; needs a full-dimensional intersection."""
    meet = intersect(k, l)
    if meet is EMPTY or not meet.is_full_dimensional:
        raise GeometryError("intersection is not full-dimensional; "
                            "use build_thickened_path or build_bridge_path")
    return Path.from_bodies([k, meet, l])


def build_thickened_path(k: Body, l: Body, delta: float, m: int | None = None) -> Path:
    """``K -> K ∩ N -> N -> L ∩ N -> L`` with ``N = (K ∩ L) + delta B``."""
    if delta <= 0:
        raise GeometryError("delta must be positive")
    meet = intersect(k, l)
    if meet is EMPTY:
        raise GeometryError("empty intersection; use build_bridge_path")
    hood = minkowski_sum(meet, _ball(k.dim, delta, m))
    return Path.from_bodies([k, intersect(k, hood), hood, intersect(l, hood), l])


def thickened_length(phi: Valuation, k: Body, l: Body, delta: float, m: int | None = None) -> float:
    """Closed-form length of the thickened path."""
    meet = intersect(k, l)
    hood = minkowski_sum(meet, _ball(k.dim, delta, m))
    return phi(k) + phi(l) + 2.0 * (phi(hood) - phi(intersect(k, hood)) - phi(intersect(l, hood)))


def spheropolyhedron(p, q, r: float, m: int | None = None) -> Body:
    """``[p, q] + r B`` with ``B`` a polytope ball."""
    if r <= 0:
        raise GeometryError("radius must be positive")
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    return minkowski_sum(segment(p, q), _ball(len(p), r, m))


def build_bridge_path(k: Body, l: Body, r: float, m: int | None = None) -> Path:
    """``K -> H ∩ K -> H -> H ∩ L -> L`` with ``H`` a spheropolyhedron joining the centroids."""
    h = spheropolyhedron(k.centroid, l.centroid, r, m)
    hk, hl = intersect(h, k), intersect(h, l)
    for part in (hk, hl):
        if part is EMPTY or not part.is_full_dimensional:
            raise GeometryError("bridge meets a body in a degenerate set; increase r")
    return Path.from_bodies([k, hk, h, hl, l])


def backward_case(phi: Valuation, k: Body, l: Body, zero: float = 1e-12) -> str:
    """Which constructive case applies: ``"i"`` full-dimensional intersection,
    ``"ii"`` lower-dimensional intersection of positive value, ``"iii"`` value zero."""
    meet = intersect(k, l)
    if meet is not EMPTY and meet.is_full_dimensional:
        return "i"
    if meet is not EMPTY and phi(meet) > zero:
        return "ii"
    return "iii"


def halving_sequence(start: float = 0.2, steps: int = 7) -> list:
    return [start * 2.0 ** -j for j in range(steps)]


def extrapolate_linear(values) -> float:
    """Richardson limit of a sequence with error linear in the halved parameter."""
    return 2.0 * values[-1] - values[-2]


# -- bridging bodies ------------------------------------------------------------

@dataclass
class BridgingCertificate:
    outside_volume: float
    missing_volume: float
    meet_k_volume: float
    meet_l_volume: float
    accepted: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def bridging_certificate(k: Body, l: Body, m: Body) -> BridgingCertificate:
    """Checks ``K ∩ L ⊆ M ⊆ K ∪ L`` up to volume ``eps_vol`` and full-dimensional ``M ∩ K``, ``M ∩ L``."""
    eps = k.tol.eps_vol
    mk, ml, kl = intersect(m, k), intersect(m, l), intersect(k, l)
    outside = volume(m) - volume(mk) - volume(ml) + volume(intersect(mk, l))
    missing = volume(kl) - volume(intersect(kl, m))
    vk, vl = volume(mk), volume(ml)
    ok = outside <= eps and missing <= eps and vk > eps and vl > eps
    return BridgingCertificate(outside, missing, vk, vl, bool(ok))


def _slab(center, normal, half_width, radius) -> Body:
    n = len(center)
    _, _, vt = np.linalg.svd(normal[None, :])
    perp = vt[1:]
    corners = []
    for sign in (-1.0, 1.0):
        for signs in np.array(np.meshgrid(*[[-1.0, 1.0]] * (n - 1))).reshape(n - 1, -1).T:
            corners.append(center + sign * half_width * normal + radius * signs @ perp)
    return convex_hull(np.array(corners))


def find_bridging_body(k: Body, l: Body):
    """A certified bridging body ``M``, or ``None``.

    Tries ``M = K`` for overlapping bodies, then slabs and prisms straddling a
    shared face.  ``None`` is conclusive only for disjoint bodies.
    """
    meet = intersect(k, l)
    if meet is EMPTY:
        return None
    eps = k.tol.eps_vol
    if volume(meet) > eps:
        return k
    hull = hull_union(k, l)
    union_convex = abs(volume(hull) - (volume(k) + volume(l) - volume(meet))) <= eps
    if meet.affine_dim == k.dim - 1:
        w = np.linalg.svd(meet.vertices - meet.centroid)[2][-1]
    else:
        w = l.centroid - k.centroid
        w = w / np.linalg.norm(w)
    if (l.centroid - k.centroid) @ w < 0:
        w = -w
    f0 = meet.centroid
    reach_k = float(support_many(k, -w)[0] + f0 @ w)
    reach_l = float(support_many(l, w)[0] - f0 @ w)
    radius = 2.0 * float(np.ptp(hull.vertices, axis=0).max()) + 1.0
    base = 0.25 * min(reach_k, reach_l)
    for j in range(5):
        slab = _slab(f0, w, base * 2.0 ** -j, radius)
        candidates = []
        if union_convex:
            candidates.append(intersect(hull, slab))
        half = base * 2.0 ** -j
        # prism over the shared face, for faces that only partly cover a facet
        candidates.append(minkowski_sum(meet, segment(f0 - half * w, f0 + half * w).translate(-f0)))
        parts = [intersect(k, slab), intersect(l, slab)]
        if all(p is not EMPTY for p in parts):
            candidates.append(hull_union(*parts))
        for cand in candidates:
            if cand is not EMPTY and bridging_certificate(k, l, cand).accepted:
                return cand
    return None


def build_bridging_geodesic(k: Body, l: Body, m: Body) -> Path:
    """``K -> M ∩ K -> M -> M ∩ L -> L``."""
    if not bridging_certificate(k, l, m).accepted:
        raise GeometryError("M is not a bridging body for (K, L)")
    return Path.from_bodies([k, intersect(m, k), m, intersect(m, l), l])


# -- lower bound ---------------------------------------------------------------

def thm1_lower_bound(measure: MixedAreaMeasure2D, k: Body, l: Body) -> float:
    """``(1/2) sum_j |h_K(u_j) - h_L(u_j)| w_j``: no meet-deviation path beats it."""
    if k.dim != 2 or l.dim != 2:
        raise GeometryError("the support-function lower bound is implemented in the plane")
    gap = np.abs(support_many(k, measure.normals) - support_many(l, measure.normals))
    return 0.5 * measure.integrate(gap)
