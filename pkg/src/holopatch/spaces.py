"""Sampled maps, sup norms, Lagrange interpolation and polynomial fitting."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .compacts import DiscretizedCompact, GeometryError, _as_complex

MAX_INTERPOLATION_POINTS = 12


class InterpolationError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SampledMap:
    """Values of a map K -> C^m at the samples of a discretised compact.

    ``values`` has shape ``(len(domain), m)``.
    """

    domain: DiscretizedCompact
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.ndim == 1:
            v = v[:, None]
        if v.shape[0] != len(self.domain):
            raise ValueError(f"{v.shape[0]} values for {len(self.domain)} samples")
        if not np.all(np.isfinite(v)):
            raise ValueError("sampled map has non-finite entries")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, domain: DiscretizedCompact, func) -> "SampledMap":
        v = np.asarray(func(domain.points), dtype=complex)
        return cls(domain, v.reshape(len(domain), -1))

    @property
    def m(self) -> int:
        return self.values.shape[1]

    def norm(self) -> float:
        return sup_norm(self)

    def restrict(self, sub: DiscretizedCompact) -> "SampledMap":
        idx = self.domain.locate(sub)
        if np.any(idx < 0):
            raise GeometryError("restriction target is not a subset of the domain")
        return SampledMap(sub, self.values[idx])

    def with_values(self, values) -> "SampledMap":
        return SampledMap(self.domain, values)

    def __add__(self, other: "SampledMap") -> "SampledMap":
        return SampledMap(self.domain, self.values + _vals(other))

    def __sub__(self, other: "SampledMap") -> "SampledMap":
        return SampledMap(self.domain, self.values - _vals(other))

    def __mul__(self, c) -> "SampledMap":
        return SampledMap(self.domain, self.values * c)

    __rmul__ = __mul__

    def __neg__(self) -> "SampledMap":
        return SampledMap(self.domain, -self.values)


def _vals(x):
    return x.values if isinstance(x, SampledMap) else x


def sup_norm(f: SampledMap) -> float:
    """Max over samples of the max-modulus of the components."""
    if len(f.domain) == 0:
        raise ValueError("sup norm of a map on an empty domain")
    return float(np.abs(f.values).max())


# ---------------------------------------------------------------------------
# interpolation


@dataclass(frozen=True)
class InterpolationSet:
    """Finite set of interpolation points with a snapping radius."""

    points: tuple = ()
    snap_radius: float | None = None
    allow_large: bool = False

    def __post_init__(self):
        pts = tuple(_as_complex(p) for p in self.points)
        object.__setattr__(self, "points", pts)
        if not all(math.isfinite(p.real) and math.isfinite(p.imag) for p in pts):
            raise InterpolationError("interpolation points must be finite")
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                if pts[i] == pts[j]:
                    raise InterpolationError("interpolation points must be distinct")
        if len(pts) > MAX_INTERPOLATION_POINTS and not self.allow_large:
            raise InterpolationError(
                f"{len(pts)} interpolation points exceed the limit {MAX_INTERPOLATION_POINTS}")

    def __len__(self) -> int:
        return len(self.points)

    def array(self) -> np.ndarray:
        return np.array(self.points, dtype=complex)

    def within(self, domain: DiscretizedCompact) -> "InterpolationSet":
        """Points of this set that snap onto ``domain`` (P n K)."""
        if not len(domain) or not self.points:
            return InterpolationSet((), self.snap_radius, self.allow_large)
        r = self._radius(domain)
        keep = [p for p in self.points if np.abs(domain.points - p).min() <= r]
        return InterpolationSet(tuple(keep), self.snap_radius, self.allow_large)

    def _radius(self, domain: DiscretizedCompact) -> float:
        return 0.5 * domain.h if self.snap_radius is None else self.snap_radius

    def snap(self, domain: DiscretizedCompact) -> np.ndarray:
        """Index of the sample each point snaps to; error if none is close."""
        if not self.points:
            return np.zeros(0, dtype=int)
        if not len(domain):
            raise InterpolationError("cannot snap interpolation points to an empty domain")
        r = self._radius(domain)
        idx = []
        for p in self.points:
            d = np.abs(domain.points - p)
            k = int(np.argmin(d))
            if d[k] > r:
                raise InterpolationError(f"interpolation point {p} is {d[k]:.3g} from the nearest "
                                         f"sample (snap radius {r:.3g})")
            idx.append(k)
        if len(set(idx)) != len(idx):
            raise InterpolationError("two interpolation points snap to the same sample")
        return np.array(idx, dtype=int)

    def snapped(self, domain: DiscretizedCompact) -> np.ndarray:
        return domain.points[self.snap(domain)]


@dataclass(frozen=True, eq=False)
class LagrangePolynomial:
    """Interpolating polynomial in barycentric form.

    ``coefficients[k]`` is the value vector attached to node ``k`` (the weight
    of the k-th Lagrange basis polynomial).
    """

    nodes: np.ndarray
    coefficients: np.ndarray
    bary: np.ndarray

    @property
    def m(self) -> int:
        return self.coefficients.shape[1]

    @property
    def degree_bound(self) -> int:
        return max(len(self.nodes) - 1, 0)

    def basis(self, z) -> np.ndarray:
        """Matrix of the Lagrange basis ``l_k(z)``, shape ``(len(z), n)``."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        n = len(self.nodes)
        if n == 0:
            return np.zeros((len(z), 0), dtype=complex)
        diff = z[:, None] - self.nodes[None, :]
        hit = diff == 0
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = self.bary[None, :] / diff
            out = terms / terms.sum(axis=1, keepdims=True)
        rows = hit.any(axis=1)
        out[rows] = hit[rows].astype(complex)
        return out

    def __call__(self, z) -> np.ndarray:
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        if len(self.nodes) == 0:
            return np.zeros((len(z), self.m), dtype=complex)
        return self.basis(z) @ self.coefficients


def lagrange_interpolate(nodes: Sequence, values, m: int | None = None) -> LagrangePolynomial:
    """Barycentric Lagrange interpolant of ``values`` at ``nodes``."""
    x = np.array([_as_complex(p) for p in nodes], dtype=complex)
    if len(x) == 0:
        return LagrangePolynomial(x, np.zeros((0, m or 1), dtype=complex), np.zeros(0, complex))
    v = np.asarray(values, dtype=complex)
    if v.ndim == 1:
        v = v[:, None]
    if len(np.unique(x)) != len(x):
        raise InterpolationError("duplicate interpolation nodes")
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    bary = 1.0 / np.prod(diff, axis=1)
    return LagrangePolynomial(x, v, bary)


def lebesgue_constant(P: InterpolationSet, domain: DiscretizedCompact) -> float:
    """max over samples of sum_k |l_k(z)| for the snapped nodes of P."""
    if not len(P):
        return 0.0
    nodes = P.snapped(domain)
    lp = lagrange_interpolate(nodes, np.eye(len(nodes)))
    return float(np.abs(lp.basis(domain.points)).sum(axis=1).max())


def interpolant_of(f: SampledMap, P: InterpolationSet) -> LagrangePolynomial:
    idx = P.snap(f.domain)
    return lagrange_interpolate(f.domain.points[idx], f.values[idx], m=f.m)


def interpolation_correction(f: SampledMap, f_tilde: SampledMap,
                             P: InterpolationSet) -> SampledMap:
    """``f_tilde + L_P(f - f_tilde)``: an approximant that agrees with f on P."""
    if f.domain is not f_tilde.domain and len(f.domain) != len(f_tilde.domain):
        raise ValueError("maps must share a domain")
    if not len(P):
        return f_tilde
    lp = interpolant_of(f - f_tilde, P)
    out = f_tilde.values + lp(f.domain.points)
    idx = P.snap(f.domain)
    out[idx] = f.values[idx]
    return SampledMap(f.domain, out)


def project_vanishing(f: SampledMap, P: InterpolationSet) -> SampledMap:
    """``f - L_P(f)``, which vanishes on P."""
    if not len(P):
        return f
    lp = interpolant_of(f, P)
    out = f.values - lp(f.domain.points)
    out[P.snap(f.domain)] = 0.0
    return SampledMap(f.domain, out)


# ---------------------------------------------------------------------------
# discrete Cauchy-Riemann residual


@dataclass(frozen=True, eq=False)
class CRResidual:
    """Centred-difference ``|dbar f|`` at samples with all four lattice neighbours."""

    indices: np.ndarray
    field: np.ndarray
    max: float
    vacuous: bool


def cr_residual(f: SampledMap, mask: np.ndarray | None = None) -> CRResidual:
    nb = f.domain.lattice_neighbors()
    ok = np.all(nb >= 0, axis=1)
    if mask is not None:
        ok &= mask
    idx = np.nonzero(ok)[0]
    if not len(idx):
        return CRResidual(idx, np.zeros(0), 0.0, True)
    h = f.domain.h
    v = f.values
    n = nb[idx]
    dx = (v[n[:, 0]] - v[n[:, 1]]) / (2 * h)
    dy = (v[n[:, 2]] - v[n[:, 3]]) / (2 * h)
    res = np.abs(0.5 * (dx + 1j * dy)).max(axis=1)
    return CRResidual(idx, res, float(res.max()), False)


# ---------------------------------------------------------------------------
# polynomial least squares in an Arnoldi-orthogonalised basis


@dataclass(frozen=True, eq=False)
class PolynomialFit:
    """Polynomial map evaluated through the Arnoldi recurrence.

    ``center``/``scale`` normalise the variable; ``hess`` holds the recurrence
    coefficients and ``coef`` the expansion coefficients (one column per
    output component).
    """

    center: complex
    scale: float
    hess: np.ndarray
    coef: np.ndarray
    norm0: float

    @property
    def degree(self) -> int:
        return self.hess.shape[1]

    def basis(self, z) -> np.ndarray:
        s = (np.atleast_1d(np.asarray(z, dtype=complex)) - self.center) / self.scale
        n = self.degree
        Q = np.empty((len(s), n + 1), dtype=complex)
        Q[:, 0] = 1.0 / self.norm0
        for k in range(n):
            q = s * Q[:, k]
            q -= Q[:, :k + 1] @ self.hess[:k + 1, k]
            Q[:, k + 1] = q / self.hess[k + 1, k]
        return Q

    def __call__(self, z) -> np.ndarray:
        return self.basis(z) @ self.coef


def _arnoldi(s: np.ndarray, n: int, sqrt_w: np.ndarray):
    M = len(s)
    Q = np.empty((M, n + 1), dtype=complex)
    H = np.zeros((n + 1, n), dtype=complex)
    norm0 = float(np.linalg.norm(sqrt_w) / math.sqrt(M))
    Q[:, 0] = 1.0 / norm0
    for k in range(n):
        q = s * Q[:, k]
        for _ in range(2):  # classical Gram-Schmidt twice
            c = (Q[:, :k + 1].conj() * (sqrt_w ** 2)[:, None]).T @ q / M
            q = q - Q[:, :k + 1] @ c
            H[:k + 1, k] += c
        nrm = float(np.linalg.norm(sqrt_w * q) / math.sqrt(M))
        if nrm == 0:
            nrm = 1e-300
        H[k + 1, k] = nrm
        Q[:, k + 1] = q / nrm
    return Q, H, norm0


def fit_polynomial(z: np.ndarray, values: np.ndarray, degree: int,
                   weights: np.ndarray | None = None, lawson_iters: int = 0) -> PolynomialFit:
    """Least-squares (optionally Lawson-reweighted toward minimax) polynomial fit.

    Parameters
    ----------
    z : ndarray
        Sample points.
    values : ndarray
        Shape ``(len(z),)`` or ``(len(z), m)``.
    degree : int
        Polynomial degree.
    lawson_iters : int
        Iterations of Lawson's reweighting, which drives the fit toward the
        best uniform approximation.
    """
    z = np.asarray(z, dtype=complex)
    f = np.asarray(values, dtype=complex)
    if f.ndim == 1:
        f = f[:, None]
    center = complex(z.mean())
    scale = float(np.abs(z - center).max()) or 1.0
    s = (z - center) / scale
    degree = int(min(degree, max(len(z) - 1, 0)))
    w = np.ones(len(z)) / len(z) if weights is None else np.asarray(weights, float) / np.sum(weights)
    Q, H, norm0 = _arnoldi(s, degree, np.ones(len(z)))
    best = None
    for it in range(lawson_iters + 1):
        sw = np.sqrt(w)[:, None]
        coef, *_ = np.linalg.lstsq(Q * sw, f * sw, rcond=None)
        err = np.abs(Q @ coef - f).max(axis=1)
        emax = float(err.max())
        if best is None or emax < best[0]:
            best = (emax, coef)
        if it < lawson_iters:
            w = w * (err + 1e-300)
            w = w / w.sum()
    return PolynomialFit(center, scale, H, best[1], norm0)
