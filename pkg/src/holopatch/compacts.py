"""Compact planar sets as lattice quadrature samples, good pairs and slabs.

Two-dimensional primitives are sampled on the global lattice ``h * (Z + iZ)``
(so every compact built with the same ``h`` shares sample positions and set
operations reduce to key matching).  One-dimensional primitives (polyline
arcs) are sampled by arclength with weight zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

KEY_RES = 1024
_SUPERSAMPLE = 4
_POLY_RES = 4096


class GeometryError(ValueError):
    """Raised for invalid primitives or failed geometric preconditions."""


# ---------------------------------------------------------------------------
# primitives


def _as_complex(p) -> complex:
    if isinstance(p, complex):
        return p
    if isinstance(p, (int, float)):
        return complex(p)
    x, y = p
    return complex(float(x), float(y))


def _segments_cross(a, b, c, d) -> bool:
    def orient(p, q, r):
        v = (q - p).conjugate() * (r - p)
        return v.imag

    o1, o2 = orient(a, b, c), orient(a, b, d)
    o3, o4 = orient(c, d, a), orient(c, d, b)
    if o1 * o2 < 0 and o3 * o4 < 0:
        return True

    def on_seg(p, q, r):  # r on pq, assuming collinear
        return (min(p.real, q.real) - 1e-15 <= r.real <= max(p.real, q.real) + 1e-15
                and min(p.imag, q.imag) - 1e-15 <= r.imag <= max(p.imag, q.imag) + 1e-15)

    tol = 1e-14
    if abs(o1) < tol and on_seg(a, b, c):
        return True
    if abs(o2) < tol and on_seg(a, b, d):
        return True
    if abs(o3) < tol and on_seg(c, d, a):
        return True
    if abs(o4) < tol and on_seg(c, d, b):
        return True
    return False


def _polygon_self_intersects(poly: np.ndarray) -> bool:
    n = len(poly)
    seg_a = poly
    seg_b = np.roll(poly, -1)
    for i in range(n):
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            if _segments_cross(seg_a[i], seg_b[i], seg_a[j], seg_b[j]):
                return True
    return False


def _even_odd(points: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Even-odd ray casting of ``points`` against a closed polygon."""
    inside = np.zeros(points.shape, dtype=bool)
    x, y = points.real, points.imag
    a = poly
    b = np.roll(poly, -1)
    for start in range(0, len(a), 512):
        ax, ay = a[start:start + 512].real, a[start:start + 512].imag
        bx, by = b[start:start + 512].real, b[start:start + 512].imag
        cond = (ay[None, :] > y[:, None]) != (by[None, :] > y[:, None])
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = ax[None, :] + (y[:, None] - ay[None, :]) * (bx - ax)[None, :] / (by - ay)[None, :]
        crossing = cond & (x[:, None] < xint)
        inside ^= (np.count_nonzero(crossing, axis=1) % 2).astype(bool)
    return inside


@dataclass(frozen=True, eq=False)
class BoundaryCurve:
    """Closed parametric curve ``t in [0, 1) -> C`` with its derivative."""

    point: Callable[[np.ndarray], np.ndarray]
    deriv: Callable[[np.ndarray], np.ndarray]
    length: float

    def sample(self, spacing: float) -> tuple[np.ndarray, np.ndarray]:
        n = max(16, int(math.ceil(self.length / spacing)))
        t = np.arange(n) / n
        d = self.deriv(t)
        return self.point(t), d / np.abs(d)


def _circle_curve(center: complex, radius: float, orientation: int = 1) -> BoundaryCurve:
    s = float(orientation)
    return BoundaryCurve(
        point=lambda t: center + radius * np.exp(2j * np.pi * s * t),
        deriv=lambda t: 2j * np.pi * s * radius * np.exp(2j * np.pi * s * t),
        length=2 * np.pi * radius,
    )


def _polygon_curve(vertices: np.ndarray) -> BoundaryCurve:
    v = np.asarray(vertices, dtype=complex)
    edges = np.roll(v, -1) - v
    lengths = np.abs(edges)
    cum = np.concatenate([[0.0], np.cumsum(lengths)])
    total = cum[-1]

    def locate(t):
        s = (np.asarray(t) % 1.0) * total
        k = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(v) - 1)
        return k, (s - cum[k]) / lengths[k]

    def point(t):
        k, u = locate(t)
        return v[k] + u * edges[k]

    def deriv(t):
        k, _ = locate(t)
        return edges[k] * total / lengths[k]

    return BoundaryCurve(point=point, deriv=deriv, length=float(total))


@dataclass(frozen=True, eq=False)
class SetPrimitive:
    """One building block of a compact: a closed 2-d region or an arc.

    ``kind`` is one of ``disk``, ``rectangle``, ``smooth`` (region bounded by
    closed curves, even-odd rule) or ``polyline`` (an injective arc).
    """

    kind: str
    params: dict = field(default_factory=dict)
    curves: tuple = ()

    # -- constructors -------------------------------------------------------
    @classmethod
    def disk(cls, center, radius: float) -> "SetPrimitive":
        radius = float(radius)
        if not radius > 0 or not math.isfinite(radius):
            raise GeometryError(f"disk radius must be positive, got {radius}")
        c = _as_complex(center)
        return cls("disk", {"center": c, "radius": radius}, (_circle_curve(c, radius),))

    @classmethod
    def rectangle(cls, corner0, corner1) -> "SetPrimitive":
        a, b = _as_complex(corner0), _as_complex(corner1)
        x0, x1 = sorted((a.real, b.real))
        y0, y1 = sorted((a.imag, b.imag))
        if x1 - x0 <= 0 or y1 - y0 <= 0:
            raise GeometryError("degenerate rectangle")
        verts = np.array([x0 + 1j * y0, x1 + 1j * y0, x1 + 1j * y1, x0 + 1j * y1])
        return cls("rectangle", {"x0": x0, "x1": x1, "y0": y0, "y1": y1},
                   (_polygon_curve(verts),))

    @classmethod
    def polyline(cls, vertices) -> "SetPrimitive":
        v = np.array([_as_complex(p) for p in vertices], dtype=complex)
        if len(v) < 2:
            raise GeometryError("polyline needs at least two vertices")
        if not np.all(np.isfinite(v)):
            raise GeometryError("polyline vertices must be finite")
        for i in range(len(v)):
            for j in range(i + 1, len(v)):
                if abs(v[i] - v[j]) < 1e-14:
                    raise GeometryError("polyline vertices must be pairwise distinct")
        for i in range(len(v) - 1):
            for j in range(i + 2, len(v) - 1):
                if _segments_cross(v[i], v[i + 1], v[j], v[j + 1]):
                    raise GeometryError("polyline is self-intersecting")
        return cls("polyline", {"vertices": v})

    @classmethod
    def smooth(cls, curves: Sequence[BoundaryCurve], check_simple: bool = True) -> "SetPrimitive":
        curves = tuple(curves)
        if not curves:
            raise GeometryError("smooth primitive needs at least one boundary curve")
        polys = []
        for c in curves:
            poly = c.point(np.arange(_POLY_RES) / _POLY_RES)
            if check_simple and _polygon_self_intersects(c.point(np.arange(96) / 96)):
                raise GeometryError("boundary curve is not simple")
            polys.append(poly)
        return cls("smooth", {"polygons": polys}, curves)

    @classmethod
    def annulus(cls, center, r_in: float, r_out: float) -> "SetPrimitive":
        if not 0 < r_in < r_out:
            raise GeometryError("annulus radii must satisfy 0 < r_in < r_out")
        c = _as_complex(center)
        return cls.smooth([_circle_curve(c, r_out, 1), _circle_curve(c, r_in, -1)],
                          check_simple=False)

    @classmethod
    def ellipse(cls, center, a: float, b: float, angle: float = 0.0) -> "SetPrimitive":
        if not (a > 0 and b > 0):
            raise GeometryError("ellipse semi-axes must be positive")
        c = _as_complex(center)
        rot = np.exp(1j * angle)
        curve = BoundaryCurve(
            point=lambda t: c + rot * (a * np.cos(2 * np.pi * t) + 1j * b * np.sin(2 * np.pi * t)),
            deriv=lambda t: rot * 2 * np.pi * (-a * np.sin(2 * np.pi * t) + 1j * b * np.cos(2 * np.pi * t)),
            length=float(np.pi * (3 * (a + b) - math.sqrt((3 * a + b) * (a + 3 * b)))),
        )
        return cls.smooth([curve], check_simple=False)

    @classmethod
    def polygon(cls, vertices) -> "SetPrimitive":
        v = np.array([_as_complex(p) for p in vertices], dtype=complex)
        if len(v) < 3 or _polygon_self_intersects(v):
            raise GeometryError("polygon must have >= 3 vertices and be simple")
        return cls.smooth([_polygon_curve(v)], check_simple=False)

    # -- queries ------------------------------------------------------------
    @property
    def is_2d(self) -> bool:
        return self.kind != "polyline"

    def bbox(self) -> tuple[float, float, float, float]:
        if self.kind == "disk":
            c, r = self.params["center"], self.params["radius"]
            return c.real - r, c.real + r, c.imag - r, c.imag + r
        if self.kind == "rectangle":
            p = self.params
            return p["x0"], p["x1"], p["y0"], p["y1"]
        pts = (self.params["vertices"] if self.kind == "polyline"
               else np.concatenate(self.params["polygons"]))
        return pts.real.min(), pts.real.max(), pts.imag.min(), pts.imag.max()

    def contains(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if self.kind == "disk":
            return np.abs(z - self.params["center"]) <= self.params["radius"] * (1 + 1e-12)
        if self.kind == "rectangle":
            p = self.params
            e = 1e-12 * max(1.0, abs(p["x1"]), abs(p["y1"]))
            return ((z.real >= p["x0"] - e) & (z.real <= p["x1"] + e)
                    & (z.imag >= p["y0"] - e) & (z.imag <= p["y1"] + e))
        if self.kind == "smooth":
            inside = np.zeros(z.shape, dtype=bool)
            flat = z.ravel()
            acc = np.zeros(flat.shape, dtype=bool)
            for poly in self.params["polygons"]:
                acc ^= _even_odd(flat, poly)
            inside = acc.reshape(z.shape)
            return inside
        return np.zeros(z.shape, dtype=bool)

    def arc_samples(self, h: float) -> tuple[np.ndarray, np.ndarray]:
        """Arclength samples (spacing <= h, vertices included) and unit tangents."""
        v = self.params["vertices"]
        pts, tans = [], []
        for a, b in zip(v[:-1], v[1:]):
            n = max(1, int(math.ceil(abs(b - a) / h - 1e-9)))
            t = np.arange(n) / n
            pts.append(a + t * (b - a))
            tans.append(np.full(n, (b - a) / abs(b - a)))
        pts.append(v[-1:])
        tans.append(np.array([(v[-1] - v[-2]) / abs(v[-1] - v[-2])]))
        return np.concatenate(pts), np.concatenate(tans)

    def tangent_at(self, p: complex) -> complex | None:
        """Unit tangent of this primitive's boundary at its point nearest ``p``."""
        if self.kind == "disk":
            d = p - self.params["center"]
            if abs(d) == 0:
                return None
            return 1j * d / abs(d)
        if self.kind == "polyline":
            v = self.params["vertices"]
            best, tan = math.inf, None
            for a, b in zip(v[:-1], v[1:]):
                u = np.clip(((p - a) * np.conj(b - a)).real / abs(b - a) ** 2, 0, 1)
                dist = abs(a + u * (b - a) - p)
                if dist < best:
                    best, tan = dist, (b - a) / abs(b - a)
            return tan
        best, tan = math.inf, None
        for c in self.curves:
            t = np.arange(_POLY_RES) / _POLY_RES
            pts = c.point(t)
            k = int(np.argmin(np.abs(pts - p)))
            if abs(pts[k] - p) < best:
                d = c.deriv(t[k:k + 1])[0]
                best, tan = abs(pts[k] - p), d / abs(d)
        return tan

    def distance_to_boundary(self, p: complex) -> float:
        if self.kind == "disk":
            return abs(abs(p - self.params["center"]) - self.params["radius"])
        best = math.inf
        if self.kind == "polyline":
            pts, _ = self.arc_samples(1e-3)
            return float(np.abs(pts - p).min())
        for c in self.curves:
            pts = c.point(np.arange(_POLY_RES) / _POLY_RES)
            best = min(best, float(np.abs(pts - p).min()))
        return best


# ---------------------------------------------------------------------------
# discretised compacts


def lattice_keys(points: np.ndarray, h: float) -> np.ndarray:
    pts = np.asarray(points, dtype=complex)
    return np.stack([np.rint(pts.real / h * KEY_RES), np.rint(pts.imag / h * KEY_RES)],
                    axis=-1).astype(np.int64)


def _key_ids(keys: np.ndarray) -> np.ndarray:
    # unique int per key pair (keys are bounded well within 2**31)
    return keys[:, 0] * (1 << 32) + keys[:, 1]


def _components(points: np.ndarray, radius: float) -> np.ndarray:
    n = len(points)
    if n == 0:
        return np.zeros(0, dtype=int)
    xy = np.column_stack([points.real, points.imag])
    pairs = cKDTree(xy).query_pairs(radius * (1 + 1e-9), output_type="ndarray")
    adj = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    _, labels = connected_components(adj, directed=False)
    return labels.astype(int)


@dataclass(frozen=True, eq=False)
class DiscretizedCompact:
    """A compact K as samples with quadrature weights and boundary data.

    Attributes
    ----------
    h : float
        Lattice pitch.
    points, weights, interior : ndarray
        Sample positions, area weights (zero for arcs) and interior flags.
    boundary_points, boundary_tangents : ndarray
        Samples of the topological boundary with unit tangents.
    labels : ndarray
        Component label of each sample (connectivity at radius ``2h``).
    """

    h: float
    points: np.ndarray
    weights: np.ndarray
    interior: np.ndarray
    boundary_points: np.ndarray
    boundary_tangents: np.ndarray
    primitives: tuple = ()
    labels: np.ndarray | None = None
    keys: np.ndarray | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))
        object.__setattr__(self, "interior", np.asarray(self.interior, dtype=bool))
        if not np.all(np.isfinite(pts)):
            raise GeometryError("sample coordinates must be finite")
        if self.keys is None:
            object.__setattr__(self, "keys", lattice_keys(pts, self.h))
        if self.labels is None:
            object.__setattr__(self, "labels", _components(pts, 2 * self.h))

    # -- basic ----------------------------------------------------------------
    def __len__(self) -> int:
        return len(self.points)

    @property
    def area(self) -> float:
        return float(math.fsum(self.weights))

    @property
    def n_components(self) -> int:
        return int(self.labels.max()) + 1 if len(self) else 0

    @property
    def on_lattice(self) -> np.ndarray:
        return np.all(self.keys % KEY_RES == 0, axis=1)

    def key_ids(self) -> np.ndarray:
        return _key_ids(self.keys)

    def locate(self, other: "DiscretizedCompact | np.ndarray") -> np.ndarray:
        """Index into ``self`` of each sample of ``other`` (-1 when absent)."""
        ids = other.key_ids() if isinstance(other, DiscretizedCompact) else _key_ids(
            lattice_keys(np.asarray(other, dtype=complex), self.h))
        mine = self.key_ids()
        order = np.argsort(mine, kind="stable")
        pos = np.searchsorted(mine[order], ids)
        pos = np.clip(pos, 0, max(len(mine) - 1, 0))
        if len(mine) == 0:
            return np.full(len(ids), -1)
        found = mine[order][pos] == ids
        return np.where(found, order[pos], -1)

    def contains_samples(self, other: "DiscretizedCompact") -> np.ndarray:
        return self.locate(other) >= 0

    def lattice_neighbors(self) -> np.ndarray:
        """(N, 4) indices of the +x, -x, +y, -y lattice neighbours (-1 if absent)."""
        out = np.full((len(self), 4), -1, dtype=int)
        if not len(self):
            return out
        h = self.h
        for k, step in enumerate((h, -h, 1j * h, -1j * h)):
            out[:, k] = self.locate(self.points + step)
        out[~self.on_lattice] = -1
        return out

    # -- set algebra ----------------------------------------------------------
    def subset(self, mask: np.ndarray) -> "DiscretizedCompact":
        mask = np.asarray(mask)
        if mask.dtype != bool:
            m = np.zeros(len(self), dtype=bool)
            m[mask] = True
            mask = m
        pts = self.points[mask]
        sub_keys = self.keys[mask]
        interior = self.interior[mask].copy()
        if interior.any():
            probe = DiscretizedCompact(self.h, pts, self.weights[mask], interior,
                                       np.zeros(0, complex), np.zeros(0, complex),
                                       labels=np.zeros(len(pts), int), keys=sub_keys)
            nb = probe.lattice_neighbors()
            interior &= np.all(nb >= 0, axis=1)
        bp, bt = self.boundary_points, self.boundary_tangents
        if len(bp) and len(pts):
            d, _ = cKDTree(np.column_stack([pts.real, pts.imag])).query(
                np.column_stack([bp.real, bp.imag]))
            keep = d <= self.h * (1 + 1e-9)
            bp, bt = bp[keep], bt[keep]
        else:
            bp, bt = bp[:0], bt[:0]
        return DiscretizedCompact(self.h, pts, self.weights[mask], interior, bp, bt,
                                  self.primitives, keys=sub_keys)

    def union(self, other: "DiscretizedCompact") -> "DiscretizedCompact":
        _check_same_h(self, other)
        extra = self.locate(other) < 0
        pts = np.concatenate([self.points, other.points[extra]])
        return DiscretizedCompact(
            self.h, pts,
            np.concatenate([self.weights, other.weights[extra]]),
            np.concatenate([self.interior, other.interior[extra]]),
            np.concatenate([self.boundary_points, other.boundary_points]),
            np.concatenate([self.boundary_tangents, other.boundary_tangents]),
            self.primitives + other.primitives,
            keys=np.concatenate([self.keys, other.keys[extra]]),
        )

    def intersection(self, other: "DiscretizedCompact") -> "DiscretizedCompact":
        _check_same_h(self, other)
        return self.subset(other.locate(self) >= 0)

    def difference(self, other: "DiscretizedCompact") -> "DiscretizedCompact":
        _check_same_h(self, other)
        return self.subset(other.locate(self) < 0)

    def component(self, label: int) -> "DiscretizedCompact":
        return self.subset(self.labels == label)

    def tree(self) -> cKDTree:
        return cKDTree(np.column_stack([self.points.real, self.points.imag]))


def _check_same_h(a: DiscretizedCompact, b: DiscretizedCompact) -> None:
    if not math.isclose(a.h, b.h, rel_tol=1e-12):
        raise GeometryError(f"compacts use different spacings ({a.h} vs {b.h})")


def empty_compact(h: float) -> DiscretizedCompact:
    z = np.zeros(0, dtype=complex)
    return DiscretizedCompact(h, z, np.zeros(0), np.zeros(0, bool), z, z, ())


def build_compact(primitives: Sequence[SetPrimitive], h: float) -> DiscretizedCompact:
    """Discretise the union of ``primitives`` at pitch ``h``."""
    if not (h > 0 and math.isfinite(h)):
        raise GeometryError(f"spacing h must be positive, got {h}")
    primitives = tuple(primitives)
    if not primitives:
        return empty_compact(h)
    regions = [p for p in primitives if p.is_2d]
    arcs = [p for p in primitives if not p.is_2d]

    def member(z):
        acc = np.zeros(z.shape, dtype=bool)
        for p in regions:
            acc |= p.contains(z)
        return acc

    pts = np.zeros(0, complex)
    weights = np.zeros(0)
    interior = np.zeros(0, bool)
    bpts, btan = [], []
    if regions:
        boxes = np.array([p.bbox() for p in regions])
        i0 = int(math.floor(boxes[:, 0].min() / h)) - 1
        i1 = int(math.ceil(boxes[:, 1].max() / h)) + 1
        j0 = int(math.floor(boxes[:, 2].min() / h)) - 1
        j1 = int(math.ceil(boxes[:, 3].max() / h)) + 1
        ii, jj = np.meshgrid(np.arange(i0, i1 + 1), np.arange(j0, j1 + 1), indexing="ij")
        grid = (ii * h + 1j * jj * h).ravel()
        inside = member(grid)
        shape = ii.shape
        ins2 = inside.reshape(shape)
        # supersampled cell fractions near the boundary; cells of excluded
        # nodes hand their covered area to an adjacent included node
        near = np.zeros(shape, dtype=bool)
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                near[1:-1, 1:-1] |= ins2[1 + di:shape[0] - 1 + di, 1 + dj:shape[1] - 1 + dj] \
                    != ins2[1:-1, 1:-1]
        off = (np.arange(_SUPERSAMPLE) + 0.5) / _SUPERSAMPLE - 0.5
        ox, oy = np.meshgrid(off, off)
        offsets = (ox + 1j * oy).ravel() * h
        frac2 = ins2.astype(float)
        nidx = np.nonzero(near.ravel())[0]
        fr = np.zeros(len(nidx))
        for o in offsets:
            fr += member(grid[nidx] + o)
        frac2.ravel()[nidx] = fr / len(offsets)
        order = ((1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1))
        for flat in nidx:
            i, j = divmod(int(flat), shape[1])
            if ins2[i, j] or frac2[i, j] == 0:
                continue
            for di, dj in order:
                a, b = i + di, j + dj
                if 0 <= a < shape[0] and 0 <= b < shape[1] and ins2[a, b]:
                    frac2[a, b] += frac2[i, j]
                    break
        inter = np.zeros(shape, dtype=bool)
        inter[1:-1, 1:-1] = (ins2[1:-1, 1:-1] & ins2[2:, 1:-1] & ins2[:-2, 1:-1]
                             & ins2[1:-1, 2:] & ins2[1:-1, :-2])
        pts = grid[inside]
        weights = frac2.ravel()[inside] * h * h
        interior = inter.ravel()[inside]
        for p in regions:
            for c in p.curves:
                bp, bt = c.sample(h / 2)
                normal = -1j * bt
                outward = ~member(bp + normal * h / 4) | ~member(bp - normal * h / 4)
                bpts.append(bp[outward])
                btan.append(bt[outward])
    keys = lattice_keys(pts, h)
    for a in arcs:
        ap, at = a.arc_samples(h)
        ak = lattice_keys(ap, h)
        ids = _key_ids(ak)
        _, uniq = np.unique(ids, return_index=True)
        uniq = np.sort(uniq)
        ap, ak = ap[uniq], ak[uniq]
        existing = set(_key_ids(keys).tolist())
        fresh = np.array([i not in existing for i in _key_ids(ak).tolist()], dtype=bool)
        pts = np.concatenate([pts, ap[fresh]])
        keys = np.concatenate([keys, ak[fresh]]) if len(keys) else ak[fresh]
        weights = np.concatenate([weights, np.zeros(int(fresh.sum()))])
        interior = np.concatenate([interior, np.zeros(int(fresh.sum()), bool)])
        bp, bt = a.arc_samples(h / 2)
        bpts.append(bp)
        btan.append(bt)
    bp = np.concatenate(bpts) if bpts else np.zeros(0, complex)
    bt = np.concatenate(btan) if btan else np.zeros(0, complex)
    return DiscretizedCompact(h, pts, weights, interior, bp, bt, primitives,
                              keys=keys.reshape(-1, 2))


def lattice_neighborhood(k: DiscretizedCompact, radius: float,
                         include_self: bool = True) -> DiscretizedCompact:
    """Lattice samples within ``radius`` of ``k`` (plus ``k`` itself)."""
    h = k.h
    if not len(k):
        return empty_compact(h)
    x0, x1 = k.points.real.min() - radius, k.points.real.max() + radius
    y0, y1 = k.points.imag.min() - radius, k.points.imag.max() + radius
    ii, jj = np.meshgrid(np.arange(math.floor(x0 / h), math.ceil(x1 / h) + 1),
                         np.arange(math.floor(y0 / h), math.ceil(y1 / h) + 1), indexing="ij")
    grid = (ii * h + 1j * jj * h).ravel()
    d, _ = k.tree().query(np.column_stack([grid.real, grid.imag]))
    grid = grid[d <= radius * (1 + 1e-9)]
    new = DiscretizedCompact(h, grid, np.full(len(grid), h * h), np.zeros(len(grid), bool),
                             np.zeros(0, complex), np.zeros(0, complex), ())
    new = new.difference(k)
    nb = None
    if include_self:
        out = k.union(new)
    else:
        out = new
    nb = out.lattice_neighbors()
    interior = np.all(nb >= 0, axis=1) | out.interior
    return DiscretizedCompact(h, out.points, out.weights, interior, out.boundary_points,
                              out.boundary_tangents, out.primitives, keys=out.keys)


# ---------------------------------------------------------------------------
# star shape


@dataclass(frozen=True)
class StarResult:
    ok: bool
    center: complex | None
    worst_gap: float


def star_shaped_check(comp: DiscretizedCompact, center: complex | None = None) -> StarResult:
    """Look for a star centre of a sampled component.

    A candidate ``p`` passes when every segment from ``p`` to a sample stays
    within ``h`` of the component.  Candidates are the centroid (or the given
    ``center``) and the sample farthest from the component's edge.
    """
    if not len(comp):
        raise GeometryError("star_shaped_check needs a nonempty component")
    h = comp.h
    pts = comp.points
    if len(pts) == 1:
        return StarResult(True, complex(pts[0]), 0.0)
    tree = comp.tree()
    candidates = []
    if center is not None:
        candidates.append(complex(center))
    w = comp.weights
    candidates.append(complex(np.sum(pts * w) / w.sum()) if w.sum() > 0 else complex(pts.mean()))
    # sample deepest inside: distance to samples with missing lattice neighbours
    nb = comp.lattice_neighbors()
    edge = ~np.all(nb >= 0, axis=1)
    if edge.any() and (~edge).any():
        d, _ = cKDTree(np.column_stack([pts[edge].real, pts[edge].imag])).query(
            np.column_stack([pts.real, pts.imag]))
        candidates.append(complex(pts[int(np.argmax(d))]))
    else:
        centroid = candidates[-1]
        candidates.append(complex(pts[int(np.argmin(np.abs(pts - centroid)))]))
    best_gap = math.inf
    for p in candidates:
        gap = _star_gap(p, pts, tree, h)
        best_gap = min(best_gap, gap)
        if gap <= h * (1 + 1e-9):
            return StarResult(True, p, gap)
    return StarResult(False, None, best_gap)


def _star_gap(p: complex, pts: np.ndarray, tree: cKDTree, h: float) -> float:
    # sample each segment p->q at spacing h/2, report the largest distance to K
    lengths = np.abs(pts - p)
    nsteps = np.maximum(1, np.ceil(lengths / (0.5 * h)).astype(int))
    worst = 0.0
    for start in range(0, len(pts), 4096):
        q = pts[start:start + 4096]
        ns = nsteps[start:start + 4096]
        m = int(ns.max())
        t = np.arange(m + 1) / m
        seg = p + (q[:, None] - p) * t[None, :]
        d, _ = tree.query(np.column_stack([seg.real.ravel(), seg.imag.ravel()]))
        worst = max(worst, float(d.max()))
    return worst


# ---------------------------------------------------------------------------
# good pairs and cutoffs


def smooth_step(t):
    t = np.clip(t, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


@dataclass(frozen=True, eq=False)
class GoodPairContext:
    """A validated good pair with its cutoff.

    ``chi`` lives on the samples of ``union`` (K1 u K2), ``dbar_chi`` on those
    of ``k12``.  ``chi`` is 1 near closure(K1 minus K2) and 0 near
    closure(K2 minus K1).
    """

    k1: DiscretizedCompact
    k2: DiscretizedCompact
    k12: DiscretizedCompact
    union: DiscretizedCompact
    separation: float
    chi: np.ndarray
    dbar_chi: np.ndarray
    only1: np.ndarray = field(repr=False, default=None)
    only2: np.ndarray = field(repr=False, default=None)
    star_centers: tuple = ()

    def chi_on(self, k: DiscretizedCompact) -> np.ndarray:
        idx = self.union.locate(k)
        if np.any(idx < 0):
            raise GeometryError("compact is not contained in K1 u K2")
        return self.chi[idx]

    def cutoff_function(self) -> Callable[[np.ndarray], np.ndarray]:
        return _cutoff_callable(self.only1, self.only2, self.separation)


def _cutoff_callable(only1: np.ndarray, only2: np.ndarray, sep: float):
    t1 = cKDTree(np.column_stack([only1.real, only1.imag]))
    t2 = cKDTree(np.column_stack([only2.real, only2.imag]))

    def chi(z):
        z = np.asarray(z, dtype=complex)
        xy = np.column_stack([z.real.ravel(), z.imag.ravel()])
        d1, _ = t1.query(xy)
        d2, _ = t2.query(xy)
        t = d2 / (d1 + d2)
        return smooth_step((t - 0.25) / 0.5).reshape(z.shape)

    return chi


def build_cutoff(k12: DiscretizedCompact, union: DiscretizedCompact, only1: np.ndarray,
                 only2: np.ndarray, separation: float) -> tuple[np.ndarray, np.ndarray]:
    """Cutoff on ``union`` and its centred-difference dbar on ``k12``.

    ``chi = step((t - 1/4) / (1/2))`` with ``t = d2 / (d1 + d2)`` and ``d_i``
    the distance to closure(K_i minus K_j); ``step`` is ``t^2 (3 - 2t)``.
    """
    if not separation > 0:
        raise GeometryError("cutoff needs positive separation")
    h = union.h
    if len(only1) == 0 or len(only2) == 0:
        # one side is contained in the other: constant cutoff
        value = 1.0 if len(only2) == 0 else 0.0
        return np.full(len(union), value), np.zeros(len(k12), complex)
    chi = _cutoff_callable(only1, only2, separation)
    chi_u = chi(union.points)
    z = k12.points
    dx = (chi(z + h) - chi(z - h)) / (2 * h)
    dy = (chi(z + 1j * h) - chi(z - 1j * h)) / (2 * h)
    dbar = 0.5 * (dx + 1j * dy)
    dbar[np.abs(dbar) < 1e-14] = 0.0
    return chi_u, dbar


def validate_good_pair(k1: DiscretizedCompact, k2: DiscretizedCompact,
                       check_star: bool = True) -> GoodPairContext:
    """Check the good-pair conditions numerically and build the cutoff."""
    _check_same_h(k1, k2)
    h = k1.h
    k12 = k1.intersection(k2)
    only1 = k1.difference(k2).points
    only2 = k2.difference(k1).points
    if len(only1) and len(only2):
        d, _ = cKDTree(np.column_stack([only2.real, only2.imag])).query(
            np.column_stack([only1.real, only1.imag]))
        # sampled differences stop up to h short of their closures
        separation = float(d.min()) - 2 * h
    else:
        separation = math.inf
    if separation <= 2 * h:
        raise GeometryError(
            f"closures of K1\\K2 and K2\\K1 are not separated (separation "
            f"{separation:.3g} <= 2h = {2 * h:.3g})")
    centers = []
    if check_star:
        for lab in range(k12.n_components):
            res = star_shaped_check(k12.component(lab))
            if not res.ok:
                raise GeometryError(
                    f"component {lab} of K1 n K2 failed the star-shape test "
                    f"(gap {res.worst_gap:.3g})")
            centers.append(res.center)
    union = k1.union(k2)
    sep_eff = separation if math.isfinite(separation) else 1.0
    chi, dbar = build_cutoff(k12, union, only1, only2, sep_eff)
    return GoodPairContext(k1, k2, k12, union, separation, chi, dbar, only1, only2,
                           tuple(centers))


# ---------------------------------------------------------------------------
# generic directions and slabs


def _angle_mod_pi(z: complex) -> float:
    return math.atan2(z.imag, z.real) % math.pi


def _tangent_angles_at(k: DiscretizedCompact, p: complex) -> list[float]:
    angles = []
    for prim in k.primitives:
        if prim.distance_to_boundary(p) <= 1e-6 + 1e-3 * k.h:
            t = prim.tangent_at(p)
            if t is not None:
                angles.append(_angle_mod_pi(t))
    if not angles and len(k.boundary_points):  # fall back on sampled tangents
        near = np.abs(k.boundary_points - p) <= 1.5 * k.h
        angles = [_angle_mod_pi(t) for t in k.boundary_tangents[near]]
    return angles


@dataclass(frozen=True)
class DirectionChoice:
    direction: complex
    margin_deg: float
    tangency_count: int


def _tangency_clusters(k: DiscretizedCompact, v: complex, tol_deg: float) -> list[int]:
    """Clusters of boundary samples whose tangent is within ``tol_deg`` of +-v."""
    if not len(k.boundary_points):
        return []
    ta = np.array([_angle_mod_pi(t) for t in k.boundary_tangents])
    va = _angle_mod_pi(v)
    diff = np.abs((ta - va + math.pi / 2) % math.pi - math.pi / 2)
    near = np.nonzero(diff <= math.radians(tol_deg))[0]
    if not len(near):
        return []
    sub = k.boundary_points[near]
    labels = _components(sub, 2 * k.h)
    reps = []
    for lab in np.unique(labels):
        members = near[labels == lab]
        reps.append(int(members[np.argmin(diff[members])]))
    return reps


def _margin_deg(angles: np.ndarray, alpha: float) -> float:
    d = np.abs((angles - alpha + math.pi / 2) % math.pi - math.pi / 2)
    return math.degrees(float(d.min()))


def _mark_clearance(k: "DiscretizedCompact", points: np.ndarray, alpha: float,
                    tol_deg: float) -> float:
    """Smallest gap between a nonsmooth abscissa and any other exceptional one.

    Tangencies at a nonsmooth point itself do not count.
    """
    v = complex(math.cos(alpha), math.sin(alpha))
    x = transverse_coordinate(points, v)
    reps = _tangency_clusters(k, v, tol_deg)
    tp = k.boundary_points[reps] if reps else np.zeros(0, complex)
    keep = np.array([np.abs(points - q).min() > 2 * k.h for q in tp], dtype=bool)
    t = transverse_coordinate(tp[keep], v) if len(tp) else np.zeros(0)
    gap = math.inf
    for i, xi in enumerate(x):
        others = np.concatenate([np.delete(x, i), t])
        if len(others):
            gap = min(gap, float(np.abs(others - xi).min()))
    return gap


def choose_generic_direction(k: DiscretizedCompact, nonsmooth_points: Sequence = (),
                             tau_deg: float = 10.0,
                             preferred: complex = 1j) -> DirectionChoice:
    """Pick a line direction transverse to the tangents at nonsmooth points.

    The margin (smallest angle between ``v`` and a tangent at a nonsmooth
    point, modulo pi) is maximised exactly: the optimum is the midpoint of the
    widest gap between the sorted tangent angles.  With several nonsmooth
    points, up to half of that margin is given up to maximise the smallest
    gap between their transverse coordinates, so that they can sit in
    distinct slabs.  Without nonsmooth points every direction has margin 90
    degrees and ``preferred`` is returned.
    """
    if not len(k.boundary_points):
        raise GeometryError("direction choice needs boundary samples")
    angles = []
    for p in nonsmooth_points:
        angles.extend(_tangent_angles_at(k, _as_complex(p)))
    if angles:
        a = np.sort(np.array(angles) % math.pi)
        gaps = np.diff(np.concatenate([a, [a[0] + math.pi]]))
        g = int(np.argmax(gaps))
        alpha = (a[g] + gaps[g] / 2) % math.pi
        margin = math.degrees(gaps[g] / 2)
        pts = np.array([_as_complex(p) for p in nonsmooth_points])
        if len(pts) > 1 and margin >= tau_deg:
            # trade up to half the margin for nonsmooth abscissae that are well
            # separated from each other and from the tangency abscissae
            floor = max(tau_deg, margin / 2)
            best = (round(_mark_clearance(k, pts, alpha, tau_deg), 9), margin, alpha)
            for cand in np.radians(np.arange(0.0, 180.0, 1.0)):
                mc = _margin_deg(a, cand)
                if mc >= floor:
                    key = (round(_mark_clearance(k, pts, cand, tau_deg), 9), mc, cand)
                    if key[:2] > best[:2]:
                        best = key
            margin, alpha = best[1], best[2]
        v = complex(math.cos(alpha), math.sin(alpha))
    else:
        v = preferred / abs(preferred)
        margin = 90.0
    if margin < tau_deg:
        raise GeometryError(f"no direction achieves transversality margin {tau_deg} deg "
                            f"(best {margin:.3g} deg)")
    count = len(_tangency_clusters(k, v, tau_deg))
    return DirectionChoice(v, margin, count)


@dataclass(frozen=True, eq=False)
class SlabDecomposition:
    """Slabs ``m_j`` (1-based index ``j``) of a compact along a direction.

    Slab ``j`` is the part of K whose transverse coordinate lies in
    ``[lo[j-1], hi[j-1]]``; ``cuts[j-1]`` is its nominal centre c_j.
    """

    direction: complex
    cuts: np.ndarray
    half_widths: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    slabs: tuple
    coordinate: np.ndarray
    exceptional: np.ndarray
    band_width: float

    @property
    def parity_classes(self) -> tuple[list[int], list[int]]:
        m = len(self.slabs)
        return [j for j in range(1, m + 1) if j % 2], [j for j in range(1, m + 1) if not j % 2]

    def membership(self) -> np.ndarray:
        """(N, M) boolean slab membership of the source samples."""
        x = self.coordinate[:, None]
        return (x >= self.lo[None, :] - 1e-12) & (x <= self.hi[None, :] + 1e-12)


def transverse_coordinate(z: np.ndarray, v: complex) -> np.ndarray:
    """Coordinate constant along lines parallel to ``v`` (Re z when v = i)."""
    n = -1j * v / abs(v)
    return (np.asarray(z) * np.conj(n)).real


def exceptional_abscissae(k: DiscretizedCompact, v: complex, nonsmooth_points: Sequence = (),
                          tol_deg: float = 3.0) -> tuple[np.ndarray, np.ndarray]:
    """Tangency abscissae (lines parallel to v tangent to the boundary) and
    nonsmooth-point abscissae."""
    reps = _tangency_clusters(k, v, tol_deg)
    tang = transverse_coordinate(k.boundary_points[reps], v) if reps else np.zeros(0)
    ns = transverse_coordinate(np.array([_as_complex(p) for p in nonsmooth_points],
                                        dtype=complex), v)
    return np.sort(tang), np.sort(ns)


def slab_decompose(k: DiscretizedCompact, v: complex, delta: float,
                   nonsmooth_points: Sequence = (), spacing: float | None = None,
                   band_width: float | None = None) -> SlabDecomposition:
    """Cover K by slabs across lines parallel to ``v``.

    Cuts include every exceptional abscissa; consecutive slabs overlap in a
    band of width ``band_width`` and slabs ``j, j+2`` are disjoint.  Each
    nonsmooth point lands in the core of an even-index slab.
    """
    if not delta > 0:
        raise GeometryError("delta must be positive")
    h = k.h
    band = 3.5 * h if band_width is None else float(band_width)
    if band <= 2 * h:
        raise GeometryError("band width must exceed 2h to keep pairs separated")
    nominal = delta / 100 if spacing is None else float(spacing)
    x = transverse_coordinate(k.points, v)
    xmin, xmax = float(x.min()), float(x.max())
    tang, ns = exceptional_abscissae(k, v, nonsmooth_points)
    tang = tang[(tang >= xmin - h) & (tang <= xmax + h)]
    ns_set = list(ns)
    marks = sorted(set(np.round(np.concatenate([[xmin, xmax], tang, ns]), 12).tolist()))
    # merge marks closer than the band (keep nonsmooth abscissae exactly)
    merged: list[float] = []
    for m in marks:
        if merged and m - merged[-1] < 2 * band:
            if any(abs(m - s) < 1e-9 for s in ns_set):
                merged[-1] = m
            continue
        merged.append(m)
    required = []
    for m in merged:
        required.append(any(abs(m - s) < 1e-9 for s in ns_set))
    for s in ns_set:
        if not any(abs(s - m) < 1e-9 for m in merged):
            raise GeometryError("nonsmooth points too close together for parity assignment")
    min_spacing = band + 2 * h

    def place(counts):
        cuts = [merged[0]]
        for g in range(len(merged) - 1):
            a, b = merged[g], merged[g + 1]
            step = (b - a) / counts[g]
            cuts.extend(a + step * np.arange(1, counts[g] + 1))
        return np.array(cuts)

    def gap_count(g, target):
        return max(1, min(int(math.ceil((merged[g + 1] - merged[g]) / target - 1e-9)),
                          int(math.floor((merged[g + 1] - merged[g]) / min_spacing + 1e-9))))

    counts = [gap_count(g, nominal) for g in range(len(merged) - 1)]
    # parity: the 1-based index of mark g is 1 + sum(counts[:g])
    if required[0]:
        raise GeometryError("nonsmooth point at the extreme abscissa cannot be in an even slab")
    last_fixed = 0
    for g in range(1, len(merged)):
        if required[g] and (1 + sum(counts[:g])) % 2 == 1:
            # change the slab count of one gap since the last constrained mark
            for q in range(g - 1, last_fixed - 1, -1):
                width = merged[q + 1] - merged[q]
                if width / (counts[q] + 1) >= min_spacing:
                    counts[q] += 1
                    break
                if counts[q] > 1:
                    counts[q] -= 1
                    break
            else:
                raise GeometryError("nonsmooth points too close together for parity assignment")
        if required[g]:
            last_fixed = g
    cuts = place(counts)
    steps = np.diff(cuts)
    if len(steps) and steps.min() < min_spacing * (1 - 1e-9):
        raise GeometryError(
            f"slab spacing {steps.min():.3g} below band + 2h = {min_spacing:.3g}; "
            f"the set is too thin across v at this h")
    mids = (cuts[:-1] + cuts[1:]) / 2
    lo = np.concatenate([[xmin - h], mids - band / 2])
    hi = np.concatenate([mids + band / 2, [xmax + h]])
    half = np.maximum(cuts - lo, hi - cuts)
    half[0] = hi[0] - cuts[0]
    half[-1] = cuts[-1] - lo[-1]
    cap = delta / 100 if spacing is None else delta
    if np.any(half >= cap):
        raise GeometryError(f"slab half-widths {half.max():.3g} exceed the chart radius bound {cap:.3g}")
    slabs = tuple(k.subset((x >= lo[j] - 1e-12) & (x <= hi[j] + 1e-12)) for j in range(len(cuts)))
    dec = SlabDecomposition(v, cuts, half, lo, hi, slabs, x, np.array(merged), band)
    mem = dec.membership()
    if np.any(mem.sum(axis=1) > 2) or np.any(mem.sum(axis=1) < 1):
        raise GeometryError("slab cover is not at-most-double")
    for j in range(len(slabs) - 1):
        ov = slabs[j].intersection(slabs[j + 1])
        for lab in range(ov.n_components):
            if not star_shaped_check(ov.component(lab)).ok:
                raise GeometryError(f"overlap component of slabs {j + 1},{j + 2} is not star-shaped")
    return dec
