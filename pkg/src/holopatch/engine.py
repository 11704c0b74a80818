"""Three-pass gluing engine turning a section over a two-coloured cover into
one that is holomorphic on a lattice neighbourhood of the whole compact.

The compact K is covered by a "red" and a "blue" part whose overlap O is a
union of thin bands.  Let E be the lattice samples within a few steps of K
that are not in K.

1. glue (blue, red) with extension B1: the E samples attached to red and
   far from blue;
2. glue (red u B1, blue) with extension B2: the E samples attached to blue
   and far from red u B1;
3. glue two collars of O, the far one (L1) and the near one (L2), with
   extension B3: the remaining E samples, all close to O.

After each pass the section is holomorphic (as a polynomial plus small
corrections) on the part of K u E that pass extended to.  Budgets are
adaptive: pass k may move the section by at most ``w_k`` times what is left
of epsilon.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .compacts import DiscretizedCompact, GeometryError, lattice_neighborhood
from .patching import SectionChart, TransitionMap, fit_holomorphic, glue_good_pair
from .spaces import InterpolationSet

log = logging.getLogger(__name__)


@dataclass
class EngineOptions:
    """Tunable radii (in units of h), budgets and fit settings.

    ``separation`` is the overlap distance below which exterior samples wait
    for the final pass; ``clearance`` the minimum plane distance between an
    exterior sample and the other colour in the first two passes.
    ``cr_fraction`` rejects stage fits whose discrete dbar exceeds that
    fraction of ``10 h (1 + max |f|)``; None disables the check.
    """

    def cr_budget(self, h: float, values: np.ndarray) -> float | None:
        if self.cr_fraction is None:
            return None
        return self.cr_fraction * 10 * h * (1 + float(np.abs(values).max(initial=0.0)))

    separation: float = 3.0
    clearance: float = 4.5
    extension: float = 5.0
    certificate: float = 4.0
    collar_far: float = 3.0
    collar_near: float = 7.5
    budget_weights: tuple = (0.5, 0.7, 0.95)
    max_degree: int = 80
    extension_weight: float = 0.25
    mode: str = "frozen"
    cr_fraction: float | None = 0.5


@dataclass
class StageRecord:
    name: str
    budget: float
    deviation: float
    fit_degrees: list
    fit_errors: list
    s_norm: float
    delta: float
    newton_iterations: int
    cartan_iterations: int
    glue_residual: float
    sizes: dict
    seconds: float = 0.0

    def to_dict(self, timings: bool = True) -> dict:
        d = {
            "name": self.name,
            "budget": self.budget,
            "deviation": self.deviation,
            "fit_degrees": list(self.fit_degrees),
            "fit_errors": list(self.fit_errors),
            "s_norm": self.s_norm,
            "delta": self.delta,
            "newton_iterations": self.newton_iterations,
            "cartan_iterations": self.cartan_iterations,
            "glue_residual": self.glue_residual,
            "sizes": dict(self.sizes),
        }
        if timings:
            d["seconds"] = self.seconds
        return d


@dataclass
class Section:
    """Fibre values (N, m) over a discretised compact."""

    domain: DiscretizedCompact
    values: np.ndarray

    def on(self, sub: DiscretizedCompact) -> np.ndarray:
        idx = self.domain.locate(sub)
        if np.any(idx < 0):
            raise GeometryError("section is not defined on the requested samples")
        return self.values[idx]

    def chart(self, sub: DiscretizedCompact) -> SectionChart:
        return SectionChart.from_fibre(sub, self.on(sub))


def _xy(z: np.ndarray) -> np.ndarray:
    return np.column_stack([z.real, z.imag])


def distance_to(points: np.ndarray, ref: DiscretizedCompact | np.ndarray) -> np.ndarray:
    ref_pts = ref.points if isinstance(ref, DiscretizedCompact) else np.asarray(ref)
    if not len(ref_pts):
        return np.full(len(points), np.inf)
    if not len(points):
        return np.zeros(0)
    d, _ = cKDTree(_xy(ref_pts)).query(_xy(points))
    return d


def exterior_band(K: DiscretizedCompact, radius: float) -> DiscretizedCompact:
    """Lattice samples within ``radius`` of K that are not samples of K."""
    return lattice_neighborhood(K, radius).difference(K)


def attached(core: DiscretizedCompact, B: DiscretizedCompact) -> DiscretizedCompact:
    """Samples of B in components of ``core u B`` that contain core samples."""
    if not len(B):
        return B
    U = core.union(B)
    has = np.zeros(U.n_components, bool)
    has[U.labels[U.locate(core)]] = True
    return B.subset(has[U.labels[U.locate(B)]])


def fill_enclosed(core: DiscretizedCompact, B: DiscretizedCompact,
                  E: DiscretizedCompact) -> DiscretizedCompact:
    """Add to B the samples of E enclosed by ``core u B``.

    Distance thresholds can leave single lattice points that are surrounded
    by ``core u B``; they would show up as holes of the fit domain.  Holes
    containing a point outside E (genuine holes of K) are left alone.
    """
    if not len(B):
        return B
    h = core.h
    U = core.union(B)
    ij = np.rint(np.column_stack([U.points.real, U.points.imag]) / h).astype(int)
    lo = ij.min(axis=0) - 2
    hi = ij.max(axis=0) + 2
    grid = np.ones(tuple(hi - lo + 1), dtype=bool)
    grid[ij[:, 0] - lo[0], ij[:, 1] - lo[1]] = False
    lab, n = ndimage.label(grid)
    if n <= 1:
        return B
    eij = np.rint(np.column_stack([E.points.real, E.points.imag]) / h).astype(int) - lo
    inside = np.all((eij >= 0) & (eij < np.array(grid.shape)), axis=1)
    e_lab = np.zeros(len(E), int)
    e_lab[inside] = lab[eij[inside, 0], eij[inside, 1]]
    outer = lab[0, 0]
    add = np.zeros(len(E), bool)
    for k in range(1, n + 1):
        if k == outer:
            continue
        members = e_lab == k
        if members.sum() == (lab == k).sum():
            add |= members
    add &= B.locate(E) < 0
    return B.union(E.subset(add)) if add.any() else B


def glue_stage(name: str, current: Section, ka: DiscretizedCompact, kb: DiscretizedCompact,
               B: DiscretizedCompact, P: InterpolationSet, budget: float,
               opts: EngineOptions) -> tuple[Section, Section, StageRecord]:
    """One pass: glue the current section over (ka, kb), extending across B."""
    t0 = time.perf_counter()
    m = current.values.shape[1]
    F = TransitionMap.identity(m + 1)
    res = glue_good_pair(current.chart(ka), current.chart(kb), F, ka, kb, B, P, eta=budget,
                         max_degree=opts.max_degree, mode=opts.mode,
                         extension_weight=opts.extension_weight,
                         cr_budget=opts.cr_budget(ka.h, current.values))
    s1 = Section(res.section1.domain, res.section1.fibre)
    s2 = Section(res.section2.domain, res.section2.fibre)
    rec = StageRecord(
        name=name, budget=budget, deviation=res.deviation,
        fit_degrees=[int(d) for d in res.fit.degrees],
        fit_errors=[float(e) for e in res.fit.errors],
        s_norm=float(res.patch.s_norm), delta=float(res.patch.delta),
        newton_iterations=int(res.patch.iterations),
        cartan_iterations=int(res.patch.cartan_iterations),
        glue_residual=float(res.patch.residual),
        sizes={"k1": len(ka), "k2": len(kb), "b": len(B), "k12": len(res.ctx.k12)},
        seconds=time.perf_counter() - t0)
    log.info("%s: budget %.3g deviation %.3g degrees %s", name, budget, res.deviation,
             rec.fit_degrees)
    return s1, s2, rec


def fit_stage(name: str, current: Section, B: DiscretizedCompact, P: InterpolationSet,
              budget: float, opts: EngineOptions) -> tuple[Section, StageRecord]:
    """Replace the section by polynomials on the components of its domain u B."""
    t0 = time.perf_counter()
    target = current.domain.union(B) if len(B) else current.domain
    vals, rep = fit_holomorphic(current.values, current.domain, target, budget, P,
                                max_degree=opts.max_degree,
                                extension_weight=opts.extension_weight,
                                cr_budget=opts.cr_budget(B.h, current.values))
    dev = float(np.abs(vals[target.locate(current.domain)] - current.values).max(initial=0.0))
    rec = StageRecord(name=name, budget=budget, deviation=dev,
                      fit_degrees=[int(d) for d in rep.degrees],
                      fit_errors=[float(e) for e in rep.errors], s_norm=0.0, delta=0.0,
                      newton_iterations=0, cartan_iterations=0, glue_residual=0.0,
                      sizes={"k": len(current.domain), "b": len(B)},
                      seconds=time.perf_counter() - t0)
    return Section(target, vals), rec


def _merge(first: Section, second: Section, domain: DiscretizedCompact) -> Section:
    """Values from ``first`` where defined, else from ``second``."""
    vals = np.zeros((len(domain), first.values.shape[1]), dtype=complex)
    i1 = first.domain.locate(domain)
    i2 = second.domain.locate(domain)
    if np.any((i1 < 0) & (i2 < 0)):
        raise GeometryError("merged section leaves samples undefined")
    vals[i1 >= 0] = first.values[i1[i1 >= 0]]
    vals[i1 < 0] = second.values[i2[i1 < 0]]
    return Section(domain, vals)


@dataclass
class EngineResult:
    section: Section
    stages: list = field(default_factory=list)
    used: float = 0.0


def triple_bump(K: DiscretizedCompact, values: np.ndarray, red: np.ndarray, blue: np.ndarray,
                P: InterpolationSet, epsilon: float, opts: EngineOptions | None = None,
                used: float = 0.0, prefix: str = "",
                overlap_distance: Callable | None = None,
                exterior_side: Callable | None = None) -> EngineResult:
    """Glue ``values`` on K into a section holomorphic near all of K.

    ``red`` and ``blue`` are boolean masks over the samples of K covering
    it; their overlap must consist of thin, star-shaped bands.  ``used`` is
    the part of ``epsilon`` already spent by earlier processing.
    Returns the section on K u E with E the lattice band of width
    ``opts.extension * h`` around K.

    ``overlap_distance(points)`` measures how far points are from the
    overlap for the final collar pass.  The default is the Euclidean
    distance.  Covers with a natural coordinate (slabs, arcs) should pass a
    coordinate distance, so that the collars are strips with straight ends.

    Exterior samples at least ``opts.separation * h`` from the overlap are
    added in the first pass when ``exterior_side(points)`` is true (red
    side), in the second otherwise, and the rest in the final pass.  The
    default side is that of the nearest sample of K outside the overlap.
    """
    opts = EngineOptions() if opts is None else opts
    h = K.h
    red = np.asarray(red, bool)
    blue = np.asarray(blue, bool)
    if not np.all(red | blue):
        raise GeometryError("red and blue parts do not cover K")
    vals = np.asarray(values, dtype=complex)
    if vals.ndim == 1:
        vals = vals[:, None]
    sep = opts.separation * h
    E = exterior_band(K, opts.extension * h)
    redK, blueK = K.subset(red), K.subset(blue)
    overlap = K.subset(red & blue)
    cur = Section(K, vals)
    stages = []
    w1, w2, w3 = opts.budget_weights

    if not len(redK) or not len(blueK):
        # a single colour: one polynomial per component, nothing to glue
        sec, rec = fit_stage(prefix + "fit", cur, E, P, w3 * (epsilon - used), opts)
        stages.append(rec)
        return EngineResult(sec, stages, used + rec.deviation)

    if not len(overlap):
        raise GeometryError("red and blue parts do not overlap")

    def odist(z):
        if overlap_distance is None:
            return distance_to(z, overlap)
        return np.asarray(overlap_distance(z), float)

    # exterior samples away from the overlap follow the colour of their side
    dE = odist(E.points)
    if exterior_side is None:
        only_r, only_b = K.subset(red & ~blue), K.subset(blue & ~red)
        on_red = distance_to(E.points, only_r) <= distance_to(E.points, only_b)
    else:
        on_red = np.asarray(exterior_side(E.points), bool)
    far = dE >= sep * (1 - 1e-9)
    clear = opts.clearance * h
    only_r, only_b = K.subset(red & ~blue), K.subset(blue & ~red)
    clear1 = distance_to(E.points, only_b) > clear
    B1 = fill_enclosed(redK, attached(redK, E.subset(far & on_red & clear1)), E.subset(clear1))
    s1, s2, rec = glue_stage(prefix + "pass1", cur, blueK, redK, B1, P, w1 * (epsilon - used), opts)
    stages.append(rec)
    used += rec.deviation
    D1 = K.union(B1)
    cur = _merge(s1, s2, D1)

    ka = redK.union(B1)
    inB1 = B1.locate(E) >= 0
    clear2 = ~inB1 & (distance_to(E.points, only_r.union(B1)) > clear)
    B2 = fill_enclosed(blueK, attached(blueK, E.subset(far & ~on_red & clear2)), E.subset(clear2))
    s1, s2, rec = glue_stage(prefix + "pass2", cur, ka, blueK, B2, P, w2 * (epsilon - used), opts)
    stages.append(rec)
    used += rec.deviation
    D2 = D1.union(B2)
    cur = _merge(s1, s2, D2)

    B3 = E.difference(D2)
    if len(B3):
        dO = odist(D2.points)
        L1 = D2.subset(dO >= opts.collar_far * h)
        L2 = D2.subset(dO <= opts.collar_near * h)
        if log.isEnabledFor(logging.DEBUG):
            from .compacts import star_shaped_check
            L12 = L1.intersection(L2)
            for lab in range(L12.n_components):
                c = L12.component(lab)
                log.debug("collar %d: n=%d box=(%.3f,%.3f,%.3f,%.3f) star=%s", lab, len(c),
                          c.points.real.min(), c.points.real.max(), c.points.imag.min(),
                          c.points.imag.max(), star_shaped_check(c))
        s1, s2, rec = glue_stage(prefix + "pass3", cur, L1, L2, B3, P, w3 * (epsilon - used), opts)
        stages.append(rec)
        used += rec.deviation
        cur = _merge(s1, s2, D2.union(B3))
    return EngineResult(cur, stages, used)
