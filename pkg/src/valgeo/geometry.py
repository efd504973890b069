"""Polytope geometry in the plane and in space.

Bodies are convex polytopes stored by their extreme points (V-representation).
Lower-dimensional bodies (points, segments, flat polygons in space) are
first-class citizens.  Every predicate is floating point with a tolerance
taken from a :class:`ToleranceConfig`.

The empty set is the singleton :data:`EMPTY`; intersections return it instead
of raising.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np
from scipy import sparse
from scipy.spatial import ConvexHull


@dataclass(frozen=True)
class ToleranceConfig:
    eps_geom: float = 1e-9
    eps_rank: float = 1e-8
    eps_vol: float = 1e-9

    def __post_init__(self):
        for name in ("eps_geom", "eps_rank", "eps_vol"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be strictly positive, got {value!r}")

    def to_dict(self) -> dict:
        return {"eps_geom": self.eps_geom, "eps_rank": self.eps_rank, "eps_vol": self.eps_vol}

    @classmethod
    def from_dict(cls, d: dict) -> "ToleranceConfig":
        return cls(**{k: float(v) for k, v in d.items()})


DEFAULT_TOL = ToleranceConfig()


class GeometryError(ValueError):
    pass


class BodyFormatError(GeometryError):
    """Malformed body JSON.  ``location`` names the offending field."""

    def __init__(self, message: str, location: str = ""):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


class Empty:
    """The empty body.  Every valuation maps it to 0."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "EMPTY"

    def __bool__(self):
        return False

    def __reduce__(self):
        return (Empty, ())


EMPTY = Empty()


def _scale_of(points: np.ndarray) -> float:
    return max(1.0, float(np.abs(points).max(initial=0.0)))


class Body:
    """A nonempty compact convex polytope in R^2 or R^3.

    Build bodies with :func:`convex_hull` (or the helpers that call it); the
    constructor trusts its inputs.  Instances are immutable; derived data is
    cached lazily.
    """

    def __init__(self, vertices, affine_dim, origin, basis, normals=None, offsets=None,
                 volume=None, boundary=None, tol=DEFAULT_TOL):
        v = np.array(vertices, dtype=float)
        v.setflags(write=False)
        self._vertices = v
        self._affine_dim = int(affine_dim)
        self._origin = np.asarray(origin, dtype=float)
        self._basis = np.asarray(basis, dtype=float).reshape(-1, v.shape[1])
        self._normals = normals
        self._offsets = offsets
        self._volume = volume
        self._boundary = boundary
        self.tol = tol

    @property
    def vertices(self) -> np.ndarray:
        return self._vertices

    @property
    def dim(self) -> int:
        return self._vertices.shape[1]

    @property
    def affine_dim(self) -> int:
        return self._affine_dim

    @property
    def is_full_dimensional(self) -> bool:
        return self._affine_dim == self.dim

    @property
    def scale(self) -> float:
        return _scale_of(self._vertices)

    @cached_property
    def centroid(self) -> np.ndarray:
        """Vertex average (always a point of the body)."""
        return self._vertices.mean(axis=0)

    def __repr__(self):
        return f"Body(dim={self.dim}, affine_dim={self.affine_dim}, n_vertices={len(self._vertices)})"

    def __len__(self):
        return len(self._vertices)

    # -- inequality system ----------------------------------------------
    @cached_property
    def _halfspaces(self):
        if self._normals is not None:
            return self._normals, self._offsets
        n, k = self.dim, self._affine_dim
        rows, offs = [], []
        if k > 0:
            coords = (self._vertices - self._origin) @ self._basis.T
            if k == 1:
                rows += [self._basis[0], -self._basis[0]]
                offs += [coords[:, 0].max(), -coords[:, 0].min()]
            else:  # k == 2, a flat polygon in space (vertices are ordered)
                nrm, off = _polygon_edge_halfspaces(coords)
                rows += list(nrm @ self._basis)
                offs += list(off)
            offs = [o + float(r @ self._origin) for r, o in zip(rows, offs)]
        complement = _orthogonal_complement(self._basis, n)
        for w in complement:
            c = float(w @ self._origin)
            rows += [w, -w]
            offs += [c, -c]
        return np.array(rows, dtype=float).reshape(-1, n), np.array(offs, dtype=float)

    @property
    def normals(self) -> np.ndarray:
        """Outward unit normals ``a`` of the constraints ``a.x <= b``."""
        return self._halfspaces[0]

    @property
    def offsets(self) -> np.ndarray:
        return self._halfspaces[1]

    def contains(self, points, tol: float | None = None) -> np.ndarray:
        """Boolean mask: which points satisfy every facet inequality within ``tol``."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        if tol is None:
            tol = self.tol.eps_geom * self.scale
        a, b = self._halfspaces
        return np.all(p @ a.T <= b + tol, axis=1)

    # -- combinatorics ---------------------------------------------------
    @cached_property
    def _incidence(self) -> np.ndarray:
        a, b = self._halfspaces
        slack = np.abs(self._vertices @ a.T - b)
        return slack <= 1e-7 * self.scale

    @cached_property
    def edges(self) -> np.ndarray:
        """Vertex-index pairs of the 1-faces."""
        k, nv = self._affine_dim, len(self._vertices)
        if k == 0:
            return np.zeros((0, 2), dtype=int)
        if k == 1:
            return np.array([[0, 1]])
        if k == 2:
            idx = np.arange(nv)
            return np.column_stack([idx, np.roll(idx, -1)])
        inc = sparse.csr_matrix(self._incidence.astype(np.int32))
        shared = sparse.triu(inc @ inc.T, k=1).tocoo()
        hit = shared.data >= 2
        order = np.lexsort((shared.col[hit], shared.row[hit]))
        return np.column_stack([shared.row[hit][order], shared.col[hit][order]])

    @cached_property
    def facet_vertex_sets(self) -> list:
        """Vertex indices lying on each facet (full-dimensional spatial bodies only)."""
        if self._affine_dim != 3:
            return []
        inc = self._incidence
        return [np.nonzero(inc[:, f])[0] for f in range(inc.shape[1])]

    # -- measures ----------------------------------------------------------
    @property
    def volume(self) -> float:
        if self._affine_dim < self.dim:
            return 0.0
        return self._volume

    @property
    def boundary_measure(self) -> float:
        """Perimeter in the plane, surface area in space (flat bodies count both sides)."""
        return self._boundary

    # -- transforms --------------------------------------------------------
    def translate(self, x) -> "Body":
        return convex_hull(self._vertices + np.asarray(x, dtype=float), tol=self.tol)

    def scale_by(self, t: float) -> "Body":
        return convex_hull(float(t) * self._vertices, tol=self.tol)

    def to_json(self) -> dict:
        return {"dim": self.dim, "vertices": self._vertices.tolist()}


BodyOrEmpty = Union[Body, Empty]


def _orthogonal_complement(basis: np.ndarray, n: int) -> np.ndarray:
    if basis.shape[0] == 0:
        return np.eye(n)
    if basis.shape[0] == n:
        return np.zeros((0, n))
    _, _, vt = np.linalg.svd(basis, full_matrices=True)
    return vt[basis.shape[0]:]


def _polygon_edge_halfspaces(coords: np.ndarray):
    """Outward normals/offsets of a counter-clockwise polygon given in 2D coordinates."""
    d = np.roll(coords, -1, axis=0) - coords
    nrm = np.column_stack([d[:, 1], -d[:, 0]])
    nrm /= np.linalg.norm(nrm, axis=1, keepdims=True)
    off = np.einsum("ij,ij->i", nrm, coords)
    return nrm, off


def _prune_collinear(coords: np.ndarray, order: np.ndarray, tol: float) -> np.ndarray:
    order = list(order)
    changed = True
    while changed and len(order) > 3:
        changed = False
        for i in range(len(order)):
            p, v, q = coords[order[i - 1]], coords[order[i]], coords[order[(i + 1) % len(order)]]
            base = q - p
            length = math.hypot(*base)
            cross = base[0] * (v[1] - p[1]) - base[1] * (v[0] - p[0])
            if length == 0.0 or abs(cross) / length <= tol:
                del order[i]
                changed = True
                break
    return np.array(order)


def _hull_2d(coords: np.ndarray, tol: float):
    hull = ConvexHull(coords)
    order = _prune_collinear(coords, hull.vertices, tol)
    return order, hull.volume, hull.area


def _merge_planes(equations: np.ndarray, scale: float):
    q = np.round(equations / (1e-8 * np.array([1, 1, 1, scale])))
    _, first = np.unique(q, axis=0, return_index=True)
    eq = equations[np.sort(first)]
    return eq[:, :3], -eq[:, 3]


def _hull_3d(points: np.ndarray):
    hull = ConvexHull(points)
    normals, offsets = _merge_planes(hull.equations, _scale_of(points))
    # a hull vertex is extreme iff its incident facet normals span R^3
    gram = np.zeros((len(points), 3, 3))
    outer = np.einsum("fi,fj->fij", hull.equations[:, :3], hull.equations[:, :3])
    for c in range(3):
        np.add.at(gram, hull.simplices[:, c], outer)
    cand = hull.vertices
    smallest = np.linalg.eigvalsh(gram[cand])[:, 0]
    keep = cand[smallest > 1e-10]
    return keep, normals, offsets, hull.volume, hull.area


def convex_hull(points, tol: ToleranceConfig = DEFAULT_TOL) -> Body:
    """Convex hull of a finite point set, reduced to its extreme points."""
    p = np.asarray(points, dtype=float)
    if p.size == 0:
        raise GeometryError("empty point set")
    if p.ndim != 2 or p.shape[1] not in (2, 3):
        raise GeometryError(f"points must have shape (k, 2) or (k, 3), got {p.shape}")
    if not np.all(np.isfinite(p)):
        raise GeometryError("non-finite coordinate")
    n = p.shape[1]
    scale = _scale_of(p)
    origin = p.mean(axis=0)
    centered = p - origin
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    rank = int(np.sum(s > tol.eps_rank * max(1.0, s[0] if len(s) else 0.0)))
    basis = vt[:rank]
    edge_tol = tol.eps_geom * scale

    if rank == 0:
        return Body(origin[None, :], 0, origin, basis, volume=0.0, boundary=0.0, tol=tol)
    coords = centered @ basis.T
    if rank == 1:
        i, j = int(np.argmin(coords[:, 0])), int(np.argmax(coords[:, 0]))
        length = float(coords[j, 0] - coords[i, 0])
        boundary = 2.0 * length if n == 2 else 0.0
        return Body(p[[i, j]], 1, origin, basis, volume=0.0, boundary=boundary, tol=tol)
    if rank == 2:
        order, area, perim = _hull_2d(coords, edge_tol)
        verts = p[order]
        if n == 2:
            # keep ambient counter-clockwise orientation
            x, y = verts[:, 0], verts[:, 1]
            signed = 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))
            if signed < 0:
                verts = verts[::-1]
            nrm, off = _polygon_edge_halfspaces(verts)
            return Body(verts, 2, origin, basis, nrm, off, volume=abs(signed), boundary=perim, tol=tol)
        return Body(verts, 2, origin, basis, volume=0.0, boundary=2.0 * area, tol=tol)
    keep, nrm, off, vol, area = _hull_3d(p)
    return Body(p[keep], 3, origin, basis, nrm, off, volume=vol, boundary=area, tol=tol)


def _check_same_dim(a: Body, b: Body):
    if a.dim != b.dim:
        raise GeometryError(f"dimension mismatch: {a.dim} vs {b.dim}")


def _ordered(a: Body, b: Body):
    """The pair in a canonical order, so symmetric operations are bitwise symmetric."""
    ka = (a.vertices.shape, a.vertices.tobytes())
    kb = (b.vertices.shape, b.vertices.tobytes())
    return (b, a) if kb < ka else (a, b)


def minkowski_sum(a: Body, b: Body) -> Body:
    _check_same_dim(a, b)
    a, b = _ordered(a, b)
    pts = (a.vertices[:, None, :] + b.vertices[None, :, :]).reshape(-1, a.dim)
    return convex_hull(pts, tol=a.tol)


def interpolate(a: Body, b: Body, t: float) -> Body:
    """The Minkowski combination ``(1 - t) a + t b``."""
    _check_same_dim(a, b)
    if not 0.0 <= t <= 1.0:
        raise GeometryError(f"interpolation parameter {t} outside [0, 1]")
    if t == 0.0:
        return a
    if t == 1.0:
        return b
    pts = ((1.0 - t) * a.vertices[:, None, :] + t * b.vertices[None, :, :]).reshape(-1, a.dim)
    return convex_hull(pts, tol=a.tol)


def hull_union(a: Body, b: Body) -> Body:
    """Convex hull of the union of two bodies."""
    _check_same_dim(a, b)
    a, b = _ordered(a, b)
    return convex_hull(np.vstack([a.vertices, b.vertices]), tol=a.tol)


def is_subset(a: BodyOrEmpty, b: BodyOrEmpty, tol: float | None = None) -> bool:
    if a is EMPTY:
        return True
    if b is EMPTY:
        return False
    _check_same_dim(a, b)
    return bool(np.all(b.contains(a.vertices, tol)))


def _plane_crossings(a: Body, b: Body) -> np.ndarray:
    """Points where edges of ``a`` cross the constraint planes of ``b`` transversally."""
    e = a.edges
    if len(e) == 0:
        return np.zeros((0, a.dim))
    p, q = a.vertices[e[:, 0]], a.vertices[e[:, 1]]
    nrm, off = b.normals, b.offsets
    num = off[None, :] - p @ nrm.T
    den = (q - p) @ nrm.T
    with np.errstate(divide="ignore", invalid="ignore"):
        t = num / den
    ok = (np.abs(den) > 1e-14) & (t > 0.0) & (t < 1.0)
    ei, fi = np.nonzero(ok)
    return p[ei] + t[ei, fi][:, None] * (q[ei] - p[ei])


def intersect(a: BodyOrEmpty, b: BodyOrEmpty) -> BodyOrEmpty:
    """Intersection of two bodies, or :data:`EMPTY`.

    Candidate vertices are the vertices of each body inside the other and the
    transversal crossings of each body's edges with the other's constraint
    planes; the feasible candidates are hulled.
    """
    if a is EMPTY or b is EMPTY:
        return EMPTY
    _check_same_dim(a, b)
    a, b = _ordered(a, b)
    tol = a.tol.eps_geom * max(a.scale, b.scale)
    if is_subset(a, b, tol):
        return a
    if is_subset(b, a, tol):
        return b
    cands = [a.vertices, b.vertices, _plane_crossings(a, b), _plane_crossings(b, a)]
    pts = np.vstack(cands)
    pts = pts[a.contains(pts, tol) & b.contains(pts, tol)]
    if len(pts) == 0:
        return EMPTY
    return convex_hull(pts, tol=a.tol)


def support(k: Body, u) -> float:
    u = np.asarray(u, dtype=float)
    norm = np.linalg.norm(u)
    if norm == 0.0:
        raise GeometryError("zero direction")
    return float(np.max(k.vertices @ (u / norm)))


def support_many(k: Body, directions) -> np.ndarray:
    """Support function at each row of ``directions`` (rows are normalized)."""
    u = np.atleast_2d(np.asarray(directions, dtype=float))
    u = u / np.linalg.norm(u, axis=1, keepdims=True)
    return np.max(k.vertices @ u.T, axis=0)


def _segment_distances(points, p, q):
    d = q - p
    dd = np.einsum("ij,ij->i", d, d)
    dd = np.where(dd == 0.0, 1.0, dd)
    t = np.clip(((points[:, None, :] - p[None]) * d[None]).sum(-1) / dd[None], 0.0, 1.0)
    nearest = p[None] + t[..., None] * d[None]
    return np.linalg.norm(points[:, None, :] - nearest, axis=-1).min(axis=1)


def _projection_distances(points, k: Body, anchor, basis, tol):
    """Distance to the projection onto an affine plane, where that projection lies in ``k``."""
    rel = points - anchor
    proj = anchor + (rel @ basis.T) @ basis
    dist = np.linalg.norm(points - proj, axis=1)
    return np.where(k.contains(proj, tol), dist, np.inf)


def point_distances(points, k: Body) -> np.ndarray:
    """Euclidean distance from each point to the body."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    tol = k.tol.eps_geom * max(k.scale, _scale_of(pts))
    v = k.vertices
    best = np.linalg.norm(pts[:, None, :] - v[None], axis=-1).min(axis=1)
    e = k.edges
    if len(e):
        best = np.minimum(best, _segment_distances(pts, v[e[:, 0]], v[e[:, 1]]))
    if k.affine_dim == 3:
        for nrm, off in zip(k.normals, k.offsets):
            proj = pts - (pts @ nrm - off)[:, None] * nrm[None]
            d = np.abs(pts @ nrm - off)
            best = np.minimum(best, np.where(k.contains(proj, tol), d, np.inf))
    best = np.minimum(best, _projection_distances(pts, k, k._origin, k._basis, tol))
    return best


def hausdorff_distance(a: Body, b: Body) -> float:
    _check_same_dim(a, b)
    return float(max(point_distances(a.vertices, b).max(), point_distances(b.vertices, a).max()))


def affine_dimension(k: BodyOrEmpty) -> int:
    return -1 if k is EMPTY else k.affine_dim


def _icosphere(subdivisions: int) -> np.ndarray:
    phi = (1.0 + 5 ** 0.5) / 2.0
    verts = [(-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
             (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
             (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1)]
    faces = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
             (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
             (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
             (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    pts = [np.array(v, dtype=float) / np.linalg.norm(v) for v in verts]
    for _ in range(subdivisions):
        cache = {}

        def mid(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = pts[i] + pts[j]
                pts.append(m / np.linalg.norm(m))
                cache[key] = len(pts) - 1
            return cache[key]

        new_faces = []
        for i, j, k in faces:
            a, b, c = mid(i, j), mid(j, k), mid(k, i)
            new_faces += [(i, a, c), (j, b, a), (k, c, b), (a, b, c)]
        faces = new_faces
    return np.array(pts)


def ball_approx(center, r: float, m: int, tol: ToleranceConfig = DEFAULT_TOL) -> Body:
    """Polytope inscribed in the ball of radius ``r``.

    In the plane this is the regular ``m``-gon with a vertex on the positive
    x-axis; its support function is within ``r (1 - cos(pi/m))`` of the ball's.
    In space ``m`` is the number of icosahedron subdivisions.
    """
    c = np.asarray(center, dtype=float)
    if r <= 0:
        raise GeometryError("radius must be positive")
    if c.shape == (2,):
        if m < 3:
            raise GeometryError("a polygonal disc needs m >= 3")
        ang = 2.0 * np.pi * np.arange(m) / m
        pts = np.column_stack([np.cos(ang), np.sin(ang)])
    elif c.shape == (3,):
        if m < 0:
            raise GeometryError("subdivision count must be >= 0")
        pts = _icosphere(m)
    else:
        raise GeometryError(f"center must be a 2- or 3-vector, got shape {c.shape}")
    return convex_hull(c + r * pts, tol=tol)


def segment(p, q, tol: ToleranceConfig = DEFAULT_TOL) -> Body:
    return convex_hull(np.array([p, q], dtype=float), tol=tol)


def box(lo, hi, tol: ToleranceConfig = DEFAULT_TOL) -> Body:
    """Axis-aligned box ``[lo_1, hi_1] x ... x [lo_n, hi_n]``."""
    lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    corners = np.array(np.meshgrid(*zip(lo, hi), indexing="ij")).reshape(len(lo), -1).T
    return convex_hull(corners, tol=tol)


# -- JSON -----------------------------------------------------------------

def body_from_json(obj, tol: ToleranceConfig = DEFAULT_TOL) -> Body:
    if not isinstance(obj, dict):
        raise BodyFormatError("expected an object with 'dim' and 'vertices'", "$")
    if "dim" not in obj:
        raise BodyFormatError("missing key", "$.dim")
    dim = obj["dim"]
    if dim not in (2, 3) or isinstance(dim, bool):
        raise BodyFormatError(f"dim must be 2 or 3, got {dim!r}", "$.dim")
    verts = obj.get("vertices")
    if not isinstance(verts, list) or not verts:
        raise BodyFormatError("expected a nonempty list", "$.vertices")
    for i, v in enumerate(verts):
        if not isinstance(v, list) or len(v) != dim:
            raise BodyFormatError(f"expected a list of {dim} numbers", f"$.vertices[{i}]")
        for j, x in enumerate(v):
            if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
                raise BodyFormatError(f"not a finite number: {x!r}", f"$.vertices[{i}][{j}]")
    return convex_hull(np.array(verts, dtype=float), tol=tol)


def load_body(path, tol: ToleranceConfig = DEFAULT_TOL) -> Body:
    text = Path(path).read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise BodyFormatError(exc.msg, f"{path}:{exc.lineno}:{exc.colno}") from exc
    try:
        return body_from_json(obj, tol)
    except BodyFormatError as exc:
        raise BodyFormatError(str(exc), f"{path}") from exc


def save_body(k: Body, path):
    Path(path).write_text(json.dumps(k.to_json()))


def bodies_equal(a: BodyOrEmpty, b: BodyOrEmpty, tol: float = 1e-9) -> bool:
    """Set equality of two bodies up to ``tol`` (mutual containment)."""
    if a is EMPTY or b is EMPTY:
        return a is b
    return is_subset(a, b, tol) and is_subset(b, a, tol)


def as_points(seq: Iterable[Sequence[float]]) -> np.ndarray:
    return np.asarray(list(seq), dtype=float)
