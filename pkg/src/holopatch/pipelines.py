"""End-to-end approximation runs: finite sets, graphs, smooth domains and
unions of domains with finitely many nonsmooth contact points.

Every run lifts ``f: K -> C^m`` to the section ``z -> (f(z), z)`` of the
trivial bundle, produces a section that is holomorphic on a lattice
neighbourhood of K and projects back.  The result is certified by three
numbers: the sup error on K, the residuals at the interpolation points and
the discrete dbar on the samples within ``4h`` of K.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from .combinatorics import (bipartize_by_splitting, nerve, refine_cover_split, two_color)
from .compacts import (DiscretizedCompact, GeometryError, choose_generic_direction,
                       slab_decompose, transverse_coordinate)
from .config import PipelineConfig
from .engine import (EngineOptions, Section, StageRecord, distance_to, exterior_band,
                     fit_stage, glue_stage, triple_bump)
from .spaces import InterpolationSet, SampledMap, cr_residual

log = logging.getLogger(__name__)

REPORT_SCHEMA = 1


class PipelineError(RuntimeError):
    """A stage missed its tolerance; ``stage`` names it."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"{stage}: {message}")
        self.stage = stage


# ---------------------------------------------------------------------------
# reports


@dataclass
class RunReport:
    demo: str
    h: float
    epsilon: float
    seed: int
    scale: float
    sup_error: float
    interpolation_residuals: list
    cr_residual_max: float
    cr_bound: float
    cr_vacuous: bool
    stages: list
    info: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    @property
    def interpolation_max(self) -> float:
        return max((r["residual"] for r in self.interpolation_residuals), default=0.0)

    @property
    def checks(self) -> dict:
        return {
            "sup_error_below_epsilon": self.sup_error < self.epsilon,
            "interpolation_exact": self.interpolation_max <= 1e-9 * max(self.scale, 1.0),
            "dbar_certificate": self.cr_residual_max <= self.cr_bound,
        }

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def to_dict(self, timings: bool = True) -> dict:
        d = {
            "schema": REPORT_SCHEMA,
            "demo": self.demo,
            "h": self.h,
            "epsilon": self.epsilon,
            "seed": self.seed,
            "scale": self.scale,
            "sup_error": self.sup_error,
            "interpolation_residuals": self.interpolation_residuals,
            "interpolation_max": self.interpolation_max,
            "cr_residual_max": self.cr_residual_max,
            "cr_bound": self.cr_bound,
            "cr_vacuous": self.cr_vacuous,
            "checks": self.checks,
            "ok": self.ok,
            "stages": [s.to_dict(timings) for s in self.stages],
            "iterations": {
                "newton": sum(s.newton_iterations for s in self.stages),
                "cartan": sum(s.cartan_iterations for s in self.stages),
            },
            "info": self.info,
        }
        if timings:
            d["timings"] = self.timings
        return d

    def to_json(self, timings: bool = True) -> str:
        return json.dumps(_plain(self.to_dict(timings)), indent=2, sort_keys=True) + "\n"


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


@dataclass
class Approximant:
    """The projected approximant on the neighbourhood compact, plus its report."""

    K: DiscretizedCompact
    domain: DiscretizedCompact
    values: np.ndarray
    data: np.ndarray
    certified: np.ndarray
    report: RunReport

    def restrict_to_K(self) -> np.ndarray:
        return self.values[self.domain.locate(self.K)]

    def write_csv(self, path) -> Path:
        """One row per sample: re, im, value components, flags."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        m = self.values.shape[1]
        inK = self.K.locate(self.domain) >= 0
        fvals = np.full((len(self.domain), m), np.nan, dtype=complex)
        fvals[inK] = self.data[self.K.locate(self.domain)[inK]]
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            head = ["re", "im"]
            for c in range(m):
                head += [f"g{c}_re", f"g{c}_im", f"f{c}_re", f"f{c}_im"]
            w.writerow(head + ["in_K", "certified", "weight"])
            for k in range(len(self.domain)):
                z = self.domain.points[k]
                row = [repr(float(z.real)), repr(float(z.imag))]
                for c in range(m):
                    g, f = self.values[k, c], fvals[k, c]
                    row += [repr(float(g.real)), repr(float(g.imag)),
                            "" if np.isnan(f.real) else repr(float(f.real)),
                            "" if np.isnan(f.real) else repr(float(f.imag))]
                row += [int(inK[k]), int(self.certified[k]), repr(float(self.domain.weights[k]))]
                w.writerow(row)
        return path


def certify(demo: str, K: DiscretizedCompact, f_vals: np.ndarray, section: Section,
            P: InterpolationSet, epsilon: float, seed: int, stages: list, opts: EngineOptions,
            info: dict | None = None, t0: float | None = None) -> Approximant:
    """Measure the three report metrics of a final section."""
    h = K.h
    dom = section.domain
    vals = section.values
    iK = dom.locate(K)
    if np.any(iK < 0):
        raise GeometryError("final section does not cover K")
    f_vals = np.asarray(f_vals, dtype=complex).reshape(len(K), -1)
    scale = float(np.abs(f_vals).max(initial=0.0))
    sup = float(np.abs(vals[iK] - f_vals).max(initial=0.0))
    pts = P.within(K)
    pidx = pts.snap(K) if len(pts) else np.zeros(0, int)
    residuals = [{"point": [float(p.real), float(p.imag)],
                  "residual": float(np.abs(vals[iK[k]] - f_vals[k]).max())}
                 for p, k in zip(pts.points, pidx)]
    cert = distance_to(dom.points, K) <= opts.certificate * h * (1 + 1e-9)
    cr = cr_residual(SampledMap(dom, vals), mask=cert)
    timings = {s.name: s.seconds for s in stages}
    if t0 is not None:
        timings["total"] = time.perf_counter() - t0
    rep = RunReport(demo, h, epsilon, seed, scale, sup, residuals, float(cr.max),
                    10 * h * (1 + scale), bool(cr.vacuous), list(stages), dict(info or {}),
                    timings)
    return Approximant(K, dom, vals, f_vals, cert, rep)


def _opts(cfg: PipelineConfig) -> EngineOptions:
    e = cfg.section("engine")
    o = EngineOptions()
    for k, v in e.items():
        setattr(o, k, tuple(v) if k == "budget_weights" else v)
    return o


# ---------------------------------------------------------------------------
# finite sets


def component_gap(K: DiscretizedCompact) -> float:
    """Smallest distance between samples of different components."""
    if K.n_components < 2:
        return math.inf
    best = math.inf
    for lab in range(K.n_components):
        mine = K.labels == lab
        d = distance_to(K.points[mine], K.points[~mine])
        best = min(best, float(d.min()))
    return best


def approximate_zero_dim(K: DiscretizedCompact, f_vals: np.ndarray, P: InterpolationSet,
                         epsilon: float, opts: EngineOptions | None = None,
                         seed: int = 0) -> Approximant:
    """One polynomial per component of the lattice neighbourhood of K."""
    opts = EngineOptions() if opts is None else opts
    t0 = time.perf_counter()
    h = K.h
    gap = component_gap(K)
    if gap < 4 * h * (1 - 1e-9):
        raise GeometryError(f"components of K are {gap:.3g} apart, less than 4h = {4 * h:.3g}")
    # neighbourhoods of distinct components must stay apart (linked at 2h)
    radius = min(opts.extension * h, 0.999 * (gap - 2 * h) / 2)
    E = exterior_band(K, radius)
    cur = Section(K, np.asarray(f_vals, complex).reshape(len(K), -1))
    try:
        sec, rec = fit_stage("fit", cur, E, P, 0.95 * epsilon, opts)
    except Exception as exc:
        raise PipelineError("fit", str(exc)) from exc
    info = {"components": int(K.n_components), "neighbourhood_radius": radius,
            "component_gap": None if math.isinf(gap) else gap}
    return certify("zerodim", K, cur.values, sec, P, epsilon, seed, [rec], opts, info, t0)


# ---------------------------------------------------------------------------
# graphs


@dataclass
class ArcChart:
    """Edge index and arclength of every sample of a graph compact."""

    edges: list
    lengths: np.ndarray
    edge_of: np.ndarray
    s: np.ndarray
    vertices: np.ndarray
    ends: list


def _polyline_project(z: np.ndarray, verts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    best_d = np.full(len(z), np.inf)
    best_s = np.zeros(len(z))
    acc = 0.0
    for a, b in zip(verts[:-1], verts[1:]):
        seg = b - a
        L = abs(seg)
        t = np.clip(((z - a) * np.conj(seg)).real / (L * L), 0.0, 1.0)
        d = np.abs(z - (a + t * seg))
        better = d < best_d
        best_d[better] = d[better]
        best_s[better] = acc + t[better] * L
        acc += L
    return best_d, best_s


def arc_chart(K: DiscretizedCompact, tol: float = 1e-9) -> ArcChart:
    prims = [p for p in K.primitives if p.kind == "polyline"]
    if not prims or any(p.kind != "polyline" for p in K.primitives):
        raise GeometryError("graph runs need a compact made of polylines only")
    edges = [np.asarray(p.params["vertices"], dtype=complex) for p in prims]
    lengths = np.array([float(np.abs(np.diff(v)).sum()) for v in edges])
    D = np.full((len(K), len(edges)), np.inf)
    S = np.zeros((len(K), len(edges)))
    for e, v in enumerate(edges):
        D[:, e], S[:, e] = _polyline_project(K.points, v)
    edge_of = np.argmin(D, axis=1)
    if np.any(D[np.arange(len(K)), edge_of] > K.h):
        raise GeometryError("sample off every polyline")
    s = S[np.arange(len(K)), edge_of]
    # cluster polyline ends into graph vertices
    verts: list = []
    ends = []
    for v in edges:
        pair = []
        for p in (v[0], v[-1]):
            for i, q in enumerate(verts):
                if abs(p - q) <= max(tol, 1e-9 * K.h):
                    pair.append(i)
                    break
            else:
                verts.append(p)
                pair.append(len(verts) - 1)
        ends.append(tuple(pair))
    return ArcChart(edges, lengths, edge_of, s, np.array(verts), ends)


def graph_cover(K: DiscretizedCompact, chunk_length: float = 0.5, star_radius: float = 0.3,
                overlap: float = 6.0, chunks: list | None = None,
                corner_clearance: float = 0.6) -> tuple[list, ArcChart]:
    """Cover a graph by vertex stars and edge chunks overlapping in short arcs.

    Vertices of degree at least 2 get a star of arclength radius
    ``star_radius``; the remaining part of each edge is cut into chunks of
    roughly ``chunk_length`` (or ``chunks[e]`` pieces).  Consecutive pieces
    overlap in arcs of length ``overlap * h``.  Chunk boundaries are moved
    ``corner_clearance`` away from polyline corners when the chunks allow.
    """
    ch = arc_chart(K)
    h = K.h
    W = overlap * h
    deg = np.zeros(len(ch.vertices), int)
    for a, b in ch.ends:
        deg[a] += 1
        deg[b] += 1
    junction = deg >= 2
    masks = []
    # edges with the most chunks come first: the lowest nerve edge, which
    # bipartization splits, is then a chunk-chunk overlap inside an edge
    counts = {}
    for e, L in enumerate(ch.lengths):
        a0, b0 = ch.ends[e]
        lo = star_radius if junction[a0] else 0.0
        hi = L - star_radius if junction[b0] else L
        counts[e] = chunks[e] if chunks is not None else max(1, int(round((hi - lo) / chunk_length)))
    for e in sorted(counts, key=lambda e: (-counts[e], e)):
        L = ch.lengths[e]
        a0, b0 = ch.ends[e]
        lo = star_radius if junction[a0] else 0.0
        hi = L - star_radius if junction[b0] else L
        if hi - lo < 2 * W:
            raise GeometryError(f"edge {e} is too short for its stars at this resolution")
        k = counts[e]
        t = np.linspace(lo, hi, k + 1)
        # keep chunk boundaries off polyline corners
        corners = np.cumsum(np.abs(np.diff(ch.edges[e])))[:-1]
        for i in range(1, k):
            for c in corners:
                if abs(t[i] - c) < corner_clearance:
                    for cand in sorted((c - corner_clearance, c + corner_clearance),
                                       key=lambda u: abs(u - t[i])):
                        if t[i - 1] + 2 * W <= cand <= t[i + 1] - 2 * W:
                            t[i] = cand
                            break
        on = ch.edge_of == e
        for i in range(k):
            a = t[i] - (W / 2 if i > 0 or junction[a0] else 0.0)
            b = t[i + 1] + (W / 2 if i < k - 1 or junction[b0] else 0.0)
            masks.append(on & (ch.s >= a - 1e-12) & (ch.s <= b + 1e-12))
    for vi in np.nonzero(junction)[0]:
        m = np.abs(K.points - ch.vertices[vi]) <= 0.5 * h
        for e, (a0, b0) in enumerate(ch.ends):
            on = ch.edge_of == e
            if a0 == vi:
                m |= on & (ch.s <= star_radius + W / 2 + 1e-12)
            if b0 == vi:
                m |= on & (ch.s >= ch.lengths[e] - star_radius - W / 2 - 1e-12)
        masks.append(m)
    cover = [K.subset(m) for m in masks]
    return cover, ch


def geodesic_overlap_distance(K: DiscretizedCompact, overlap: np.ndarray, link: float = 1.5):
    """Distance inside K (through vertices) to the overlap samples.

    K samples closer than ``link * h`` are joined by edges weighted by their
    plane distance.  The returned callable evaluates a point at its nearest
    sample of K.
    """
    h = K.h
    xy = np.column_stack([K.points.real, K.points.imag])
    tree = K.tree()
    pairs = tree.query_pairs(link * h, output_type="ndarray")
    w = np.linalg.norm(xy[pairs[:, 0]] - xy[pairs[:, 1]], axis=1)
    G = coo_matrix((w, (pairs[:, 0], pairs[:, 1])), shape=(len(K), len(K))).tocsr()
    src = np.nonzero(overlap)[0]
    if len(src):
        along = dijkstra(G, directed=False, indices=src, min_only=True)
    else:
        along = np.full(len(K), np.inf)

    def dist(z):
        z = np.asarray(z)
        _, nn = tree.query(np.column_stack([z.real, z.imag]))
        return along[nn]

    return dist


def approximate_graph(K: DiscretizedCompact, f_vals: np.ndarray, P: InterpolationSet,
                      epsilon: float, opts: EngineOptions | None = None, seed: int = 0,
                      chunk_length: float = 0.5, star_radius: float = 0.3,
                      overlap: float = 6.0, chunks: list | None = None,
                      split_inner: float = 6.0) -> Approximant:
    """Cover, nerve, bipartization, two-colouring and the three-pass engine."""
    opts = EngineOptions() if opts is None else opts
    t0 = time.perf_counter()
    h = K.h
    cover, ch = graph_cover(K, chunk_length, star_radius, overlap, chunks)
    g = nerve(cover)
    bip = bipartize_by_splitting(g)
    r = split_inner * h
    for (u, v) in bip.split_edges:
        cover = refine_cover_split(cover, u, v, r_in=r, r_out=r + overlap * h)
    g2 = nerve(cover)
    col = two_color(g2)
    if not col.ok:
        raise PipelineError("bipartize", f"refined nerve still has an odd cycle {col.odd_cycle}")
    red = np.zeros(len(K), bool)
    blue = np.zeros(len(K), bool)
    for i, c in enumerate(cover):
        idx = K.locate(c)
        (red if col.colors[i] == 0 else blue)[idx] = True
    if not np.all(red | blue):
        raise GeometryError("graph cover misses samples")
    odist = geodesic_overlap_distance(K, red & blue)
    vals = np.asarray(f_vals, complex).reshape(len(K), -1)
    try:
        res = triple_bump(K, vals, red, blue, P, epsilon, opts, overlap_distance=odist)
    except GeometryError:
        raise
    except Exception as exc:
        raise PipelineError("engine", str(exc)) from exc
    info = {"cover_elements": len(cover), "nerve_edges": len(g.edges),
            "odd_basis_cycles": bip.odd_basis_count,
            "split_edges": [list(map(str, e)) for e in bip.split_edges],
            "refined_nerve_edges": len(g2.edges), "budget_used": res.used}
    return certify("graph", K, vals, res.section, P, epsilon, seed, res.stages, opts, info, t0)


# ---------------------------------------------------------------------------
# domains


def slab_parts(K: DiscretizedCompact, dec, points: np.ndarray | None = None):
    """Red (odd slabs) and blue (even slabs) masks by transverse coordinate."""
    z = K.points if points is None else points
    x = transverse_coordinate(z, dec.direction)
    mem = (x[:, None] >= dec.lo[None, :] - 1e-12) & (x[:, None] <= dec.hi[None, :] + 1e-12)
    j = np.arange(1, mem.shape[1] + 1)
    return mem[:, j % 2 == 1].any(axis=1), mem[:, j % 2 == 0].any(axis=1)


def slab_overlap_distance(dec):
    mids = (dec.cuts[:-1] + dec.cuts[1:]) / 2

    def dist(z):
        x = transverse_coordinate(np.asarray(z), dec.direction)
        if not len(mids):
            return np.full(len(x), np.inf)
        return np.maximum(np.abs(x[:, None] - mids[None, :]).min(axis=1) - dec.band_width / 2, 0.0)

    return dist


def slab_side(dec):
    """True where the transverse coordinate falls in an odd (red) slab.

    Band coordinates go to the nearer slab centre; the end slabs extend to
    infinity.
    """

    def side(z):
        x = transverse_coordinate(np.asarray(z), dec.direction)
        j = np.argmin(np.abs(x[:, None] - dec.cuts[None, :]), axis=1) + 1
        return j % 2 == 1

    return side


def _decompose(K: DiscretizedCompact, nonsmooth: list, delta: float, spacing: float,
               band: float, direction: complex | None):
    if direction is None:
        dc = choose_generic_direction(K, nonsmooth)
        v, margin = dc.direction, dc.margin_deg
    else:
        v, margin = complex(direction), float("nan")
    dec = slab_decompose(K, v, delta, nonsmooth, spacing=spacing, band_width=band * K.h)
    return dec, margin


def approximate_domain(K: DiscretizedCompact, f_vals: np.ndarray, P: InterpolationSet,
                       epsilon: float, opts: EngineOptions | None = None, seed: int = 0,
                       delta: float = 10.0, spacing: float = 0.5, band: float = 6.0,
                       direction: complex | None = None, nonsmooth: list | None = None,
                       nonsmooth_radius: float | None = None, demo: str = "domain") -> Approximant:
    """Slab parity split and the three-pass engine.

    With nonsmooth points, a first pass glues (odd slabs, even slabs) while
    extending across the lattice samples near those points, which makes the
    section holomorphic around them.  The engine then runs on the inflated
    set K u B' exactly as for a smooth domain.
    """
    opts = EngineOptions() if opts is None else opts
    nonsmooth = list(nonsmooth or [])
    t0 = time.perf_counter()
    h = K.h
    dec, margin = _decompose(K, nonsmooth, delta, spacing, band, direction)
    vals = np.asarray(f_vals, complex).reshape(len(K), -1)
    stages: list = []
    used = 0.0
    work, wvals = K, vals
    if nonsmooth:
        red, blue = slab_parts(K, dec)
        r_ns = 8 * h if nonsmooth_radius is None else nonsmooth_radius
        E = exterior_band(K, opts.extension * h)
        near = np.zeros(len(E), bool)
        for p in nonsmooth:
            near |= np.abs(E.points - p) <= r_ns
        redK = K.subset(red)
        near &= distance_to(E.points, redK) >= opts.separation * h
        Bp = E.subset(near)
        cur = Section(K, vals)
        try:
            s1, s2, rec = glue_stage("nonsmooth", cur, redK, K.subset(blue), Bp, P,
                                     0.5 * epsilon, opts)
        except Exception as exc:
            raise PipelineError("nonsmooth", str(exc)) from exc
        stages.append(rec)
        used += rec.deviation
        work = K.union(Bp)
        merged = np.zeros((len(work), vals.shape[1]), complex)
        i1 = s1.domain.locate(work)
        i2 = s2.domain.locate(work)
        merged[i1 >= 0] = s1.values[i1[i1 >= 0]]
        merged[i1 < 0] = s2.values[i2[i1 < 0]]
        wvals = merged
    red, blue = slab_parts(work, dec)
    try:
        res = triple_bump(work, wvals, red, blue, P, epsilon, opts, used=used,
                          overlap_distance=slab_overlap_distance(dec),
                          exterior_side=slab_side(dec))
    except GeometryError:
        raise
    except Exception as exc:
        raise PipelineError("engine", str(exc)) from exc
    stages.extend(res.stages)
    info = {"direction": [dec.direction.real, dec.direction.imag],
            "direction_margin_deg": None if math.isnan(margin) else margin,
            "slabs": len(dec.slabs), "cuts": [float(c) for c in dec.cuts],
            "slab_components": [int(s.n_components) for s in dec.slabs],
            "nonsmooth_points": [[p.real, p.imag] for p in nonsmooth],
            "nonsmooth_slabs": [int(np.argmin(np.abs(dec.cuts - transverse_coordinate(
                np.array([p]), dec.direction)[0]))) + 1 for p in nonsmooth],
            "budget_used": res.used}
    return certify(demo, K, vals, res.section, P, epsilon, seed, stages, opts, info, t0)


# ---------------------------------------------------------------------------
# lift / project


def lift_section(f_vals: np.ndarray, K: DiscretizedCompact) -> np.ndarray:
    """``z -> (f(z), z)`` as chart values of shape (N, m + 1)."""
    f = np.asarray(f_vals, complex).reshape(len(K), -1)
    return np.column_stack([f, K.points])


def a3_to_a2(f: SampledMap, P: InterpolationSet | None = None, epsilon: float = 0.05,
             method: str | None = None, **kwargs) -> Approximant:
    """Approximate ``f: K -> C^m`` through the section lift ``(f(z), z)``.

    The pipeline works on the fibre part of the lifted section (the base
    coordinate is carried along unchanged by every transition), so the
    projection ``g = pi o G`` is the fibre part of the result.  ``method`` is
    one of ``zerodim``, ``graph``, ``domain`` or ``c2``; it is inferred from
    K when omitted.
    """
    K = f.domain
    P = InterpolationSet() if P is None else P
    if method is None:
        if K.weights.sum() > 0:
            method = "c2" if kwargs.get("nonsmooth") else "domain"
        elif any(p.kind == "polyline" for p in K.primitives):
            method = "graph"
        else:
            method = "zerodim"
    lifted = lift_section(f.values, K)
    fibre = lifted[:, :-1]
    if method == "zerodim":
        return approximate_zero_dim(K, fibre, P, epsilon, **kwargs)
    if method == "graph":
        return approximate_graph(K, fibre, P, epsilon, **kwargs)
    if method in ("domain", "c2"):
        return approximate_domain(K, fibre, P, epsilon, demo=method, **kwargs)
    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# config-driven demos


def _run(cfg: PipelineConfig, method: str) -> Approximant:
    K = cfg.build_set()
    f = SampledMap.from_function(K, cfg.function)
    opts = _opts(cfg)
    if method == "zerodim":
        return a3_to_a2(f, cfg.P, cfg.epsilon, "zerodim", opts=opts, seed=cfg.seed)
    if method == "graph":
        c = cfg.section("cover")
        return a3_to_a2(f, cfg.P, cfg.epsilon, "graph", opts=opts, seed=cfg.seed,
                        chunk_length=c.get("chunk_length", 0.5),
                        star_radius=c.get("star_radius", 0.3),
                        overlap=c.get("overlap", 6.0), chunks=c.get("chunks"))
    s = cfg.section("slabs")
    d = s.get("direction")
    kw = dict(opts=opts, seed=cfg.seed, delta=cfg.delta, spacing=s.get("spacing", 0.5),
              band=s.get("band", 6.0), direction=None if d is None else complex(d[0], d[1]))
    if method == "c2":
        kw.update(nonsmooth=cfg.nonsmooth, nonsmooth_radius=s.get("nonsmooth_radius"))
    elif cfg.nonsmooth:
        raise GeometryError("nonsmooth points need the c2 demo")
    return a3_to_a2(f, cfg.P, cfg.epsilon, method, **kw)


def demo_zero_dim(cfg: PipelineConfig) -> Approximant:
    return _run(cfg, "zerodim")


def demo_graph(cfg: PipelineConfig) -> Approximant:
    return _run(cfg, "graph")


def demo_domain(cfg: PipelineConfig) -> Approximant:
    return _run(cfg, "domain")


def demo_c2(cfg: PipelineConfig) -> Approximant:
    return _run(cfg, "c2")


DEMOS = {"zerodim": demo_zero_dim, "graph": demo_graph, "domain": demo_domain, "c2": demo_c2}


# ---------------------------------------------------------------------------
# fixtures


def _disk(c, r):
    return {"kind": "disk", "center": [c.real, c.imag] if isinstance(c, complex) else [c, 0.0],
            "radius": r}


FIXTURES = {
    "segment": ("graph", {
        "schema": 1,
        "set": {"h": 0.02, "primitives": [{"kind": "polyline", "vertices": [[0, 0], [1, 0]]}]},
        "function": {"expr": "(x - 0.5) * abs(x - 0.5) + conj(z)"},
        "interpolation_points": [[0, 0], [0.5, 0], [1, 0]],
    }),
    "y_graph": ("graph", {
        "schema": 1,
        "set": {"h": 0.02, "primitives": [
            {"kind": "polyline", "vertices": [[0, 0], [0, 1]]},
            {"kind": "polyline", "vertices": [[0, 0], [-0.8660254037844386, -0.5]]},
            {"kind": "polyline", "vertices": [[0, 0], [0.8660254037844386, -0.5]]}]},
        "function": {"expr": "conj(z) ** 2"},
        "interpolation_points": [[0, 1], [-0.8660254037844386, -0.5], [0.8660254037844386, -0.5]],
    }),
    "triangle": ("graph", {
        "schema": 1,
        "set": {"h": 0.02, "primitives": [
            {"kind": "polyline", "vertices": [[2, 0], [1, 1.7320508075688772], [-1, 1.7320508075688772]]},
            {"kind": "polyline", "vertices": [[-1, 1.7320508075688772], [-2, 0], [-1, -1.7320508075688772]]},
            {"kind": "polyline", "vertices": [[-1, -1.7320508075688772], [1, -1.7320508075688772], [2, 0]]}]},
        "function": {"expr": "(z / 2) ** 2 + 100 * where(abs((z / 2) ** 6 - 1) > 1.2, abs((z / 2) ** 6 - 1) - 1.2, 0) ** 4"},
        "interpolation_points": [[-2, 0]],
        "cover": {"chunks": [1, 1, 2]},
    }),
    "disk": ("domain", {
        "schema": 1,
        "set": {"h": 0.02, "primitives": [_disk(0.0, 1.0)]},
        "function": {"expr": "(1 - z) ** 2.5"},
        "interpolation_points": [[0, 0]],
    }),
    "annulus": ("domain", {
        "schema": 1,
        "set": {"h": 0.02, "primitives": [{"kind": "annulus", "center": [0, 0], "r_in": 0.5,
                                           "r_out": 1.0}]},
        "function": {"expr": "(1 - z) ** 2.5 + 0.25 / z"},
        "interpolation_points": [[0.75, 0]],
    }),
    "tangent_disks": ("c2", {
        "schema": 1,
        "set": {"h": 0.02, "primitives": [_disk(-1.0, 1.0), _disk(1.0, 1.0)]},
        "function": {"expr": "(2 - z) ** 2.5 / 8 + where(x < 0, 0.005 * z ** 3, 0)"},
        "interpolation_points": [[0, 0]],
        "nonsmooth_points": [[0, 0]],
        "slabs": {"spacing": 1.0},
    }),
}


def fixture_config(name: str, epsilon: float = 0.05, h: float | None = None,
                   seed: int = 0) -> tuple[str, PipelineConfig]:
    method, data = FIXTURES[name]
    return method, PipelineConfig.from_dict(data, h=h, epsilon=epsilon, seed=seed)


def run_fixture(name: str, epsilon: float = 0.05, h: float | None = None,
                seed: int = 0) -> Approximant:
    method, cfg = fixture_config(name, epsilon, h, seed)
    return DEMOS[method](cfg)
