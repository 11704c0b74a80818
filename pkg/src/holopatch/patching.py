"""Nonlinear Cousin problem for last-coordinate-preserving transitions, and
gluing of sections across a good pair.

Sections over a planar compact are represented in a chart as maps
``u(z) = (t(z), z)`` into C^n.  Two charts are related by a transition
``F(z', z_n) = (F'(z', z_n), z_n)``.  Given ``u1`` on K1 and ``u2`` on K2 with
``u2 ~ F(u1)`` on K12, :func:`patch_sections` finds small holomorphic
corrections ``v_j`` with ``u2 + v2 = F(u1 + v1)`` on K12.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .cartan import (CartanSplit, GroupMapSample, batch_inv, opnorm_inf,
                     split_multiplicative)
from .compacts import DiscretizedCompact, GeometryError, GoodPairContext, validate_good_pair
from .cousin import AdditiveSplitter
from .newton import OperatorProblem, solve_surjective
from .spaces import (InterpolationSet, SampledMap, cr_residual, fit_polynomial,
                     lagrange_interpolate)


class PatchingError(RuntimeError):
    pass


class FitError(PatchingError):
    pass


# ---------------------------------------------------------------------------
# transition maps


@dataclass(frozen=True, eq=False)
class TransitionMap:
    """Holomorphic map of C^n preserving the last coordinate.

    ``evaluate`` and ``jacobian`` act on arrays of shape ``(N, n)``.
    ``fibre_affine`` means the map is affine in the first ``n - 1``
    coordinates, so its Jacobian does not move with the fibre variable.
    """

    n: int
    evaluate: Callable
    jacobian: Callable
    name: str = "custom"
    in_domain: Callable | None = None
    fibre_affine: bool = False
    params: dict = field(default_factory=dict)

    def __call__(self, Z: np.ndarray) -> np.ndarray:
        Z = np.asarray(Z, dtype=complex)
        out = np.asarray(self.evaluate(Z), dtype=complex).copy()
        out[:, -1] = Z[:, -1]
        return out

    def jac(self, Z: np.ndarray) -> np.ndarray:
        J = np.asarray(self.jacobian(np.asarray(Z, dtype=complex)), dtype=complex).copy()
        J[:, -1, :] = 0.0
        J[:, -1, -1] = 1.0
        return J

    def domain_mask(self, Z: np.ndarray) -> np.ndarray:
        if self.in_domain is None:
            return np.ones(len(Z), dtype=bool)
        return np.asarray(self.in_domain(Z), dtype=bool)

    def validate(self, seed: int = 0, probes: int = 16, scale: float = 1.0) -> float:
        """Probe last-coordinate preservation and the Jacobian; returns the FD error."""
        rng = np.random.default_rng(seed)
        Z = scale * (rng.normal(size=(probes, self.n)) + 1j * rng.normal(size=(probes, self.n))) / 2
        Z = Z[self.domain_mask(Z)]
        if not len(Z):
            return 0.0
        raw = np.asarray(self.evaluate(Z), dtype=complex)
        if np.abs(raw[:, -1] - Z[:, -1]).max() > 1e-12 * (1 + np.abs(Z).max()):
            raise PatchingError(f"transition {self.name} does not preserve the last coordinate")
        J = self.jac(Z)
        step = 1e-5
        err = 0.0
        for k in range(self.n):
            e = np.zeros(self.n)
            e[k] = step
            fd = (np.asarray(self.evaluate(Z + e), complex) - np.asarray(self.evaluate(Z - e), complex)) / (2 * step)
            err = max(err, float(np.abs(fd - J[:, :, k]).max()))
        if err > 1e-6 * (1 + float(np.abs(J).max())):
            raise PatchingError(f"transition {self.name}: Jacobian disagrees with finite differences ({err:.3g})")
        return err

    # -- built-ins --------------------------------------------------------
    @classmethod
    def identity(cls, n: int = 2) -> "TransitionMap":
        return cls(n, lambda Z: Z.copy(),
                   lambda Z: np.broadcast_to(np.eye(n, dtype=complex), (len(Z), n, n)).copy(),
                   "identity", fibre_affine=True)

    @classmethod
    def affine(cls, A, b) -> "TransitionMap":
        """``(A z' + b, z_n)`` with constant (n-1) x (n-1) ``A`` and ``b``."""
        A = np.atleast_2d(np.asarray(A, dtype=complex))
        b = np.atleast_1d(np.asarray(b, dtype=complex))
        n = A.shape[0] + 1
        if abs(np.linalg.det(A)) < 1e-14:
            raise PatchingError("affine transition needs an invertible A")

        def ev(Z):
            out = Z.copy()
            out[:, :-1] = Z[:, :-1] @ A.T + b
            return out

        def jac(Z):
            J = np.zeros((len(Z), n, n), dtype=complex)
            J[:, :-1, :-1] = A
            J[:, -1, -1] = 1.0
            return J

        return cls(n, ev, jac, "affine", fibre_affine=True,
                   params={"A": A.tolist(), "b": b.tolist()})

    @classmethod
    def shear(cls, a: float = 0.1, power: int = 2) -> "TransitionMap":
        """``(z1 + a z2^power, z2)``."""

        def ev(Z):
            out = Z.copy()
            out[:, 0] = Z[:, 0] + a * Z[:, 1] ** power
            return out

        def jac(Z):
            J = np.zeros((len(Z), 2, 2), dtype=complex)
            J[:, 0, 0] = 1.0
            J[:, 0, 1] = a * power * Z[:, 1] ** (power - 1)
            J[:, 1, 1] = 1.0
            return J

        return cls(2, ev, jac, "shear", fibre_affine=True, params={"a": a, "power": power})

    @classmethod
    def twist(cls, a: float = 0.5) -> "TransitionMap":
        """``(z1 exp(a z2), z2)``: a nontrivial line-bundle transition."""

        def ev(Z):
            out = Z.copy()
            out[:, 0] = Z[:, 0] * np.exp(a * Z[:, 1])
            return out

        def jac(Z):
            J = np.zeros((len(Z), 2, 2), dtype=complex)
            e = np.exp(a * Z[:, 1])
            J[:, 0, 0] = e
            J[:, 0, 1] = a * Z[:, 0] * e
            J[:, 1, 1] = 1.0
            return J

        return cls(2, ev, jac, "twist", fibre_affine=False, params={"a": a})

    @classmethod
    def cubic(cls, a: float = 0.1) -> "TransitionMap":
        """``(z1 + a z1^3, z2)``: nonlinear in the fibre, immersive near 0."""

        def ev(Z):
            out = Z.copy()
            out[:, 0] = Z[:, 0] + a * Z[:, 0] ** 3
            return out

        def jac(Z):
            J = np.zeros((len(Z), 2, 2), dtype=complex)
            J[:, 0, 0] = 1.0 + 3 * a * Z[:, 0] ** 2
            J[:, 1, 1] = 1.0
            return J

        return cls(2, ev, jac, "cubic", fibre_affine=False, params={"a": a},
                   in_domain=lambda Z: np.abs(Z[:, 0]) ** 2 < 1 / (6 * a))

    @classmethod
    def line_bundle(cls) -> "TransitionMap":
        """``(z2 z1, z2)``, a line-bundle transition defined away from ``z2 = 0``."""

        def ev(Z):
            out = Z.copy()
            out[:, 0] = Z[:, 1] * Z[:, 0]
            return out

        def jac(Z):
            J = np.zeros((len(Z), 2, 2), dtype=complex)
            J[:, 0, 0] = Z[:, 1]
            J[:, 0, 1] = Z[:, 0]
            J[:, 1, 1] = 1.0
            return J

        return cls(2, ev, jac, "line_bundle", fibre_affine=True,
                   in_domain=lambda Z: np.abs(Z[:, 1]) > 1e-8)

    @classmethod
    def from_config(cls, block: dict) -> "TransitionMap":
        kind = block.get("kind", "identity")
        if kind == "identity":
            return cls.identity(int(block.get("n", 2)))
        if kind == "affine":
            A = np.array(block["A"], dtype=float) if "A" in block else np.eye(1)
            b = np.array(block.get("b", [0.0] * A.shape[0]), dtype=complex)
            return cls.affine(A, b)
        if kind in ("shear", "shear-square"):
            return cls.shear(float(block.get("a", 0.1)), int(block.get("power", 2)))
        if kind == "line_bundle":
            return cls.line_bundle()
        if kind == "twist":
            return cls.twist(float(block.get("a", 0.5)))
        if kind == "cubic":
            return cls.cubic(float(block.get("a", 0.1)))
        raise PatchingError(f"unknown transition kind {kind!r}")


@dataclass(frozen=True, eq=False)
class SectionChart:
    """Chart values ``(t(z), z)`` of a section over ``domain``."""

    domain: DiscretizedCompact
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex).copy()
        if v.ndim != 2 or v.shape[0] != len(self.domain) or v.shape[1] < 2:
            raise ValueError("section values must have shape (N, n) with n >= 2")
        v[:, -1] = self.domain.points
        if not np.all(np.isfinite(v)):
            raise ValueError("section values must be finite")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_fibre(cls, domain: DiscretizedCompact, t) -> "SectionChart":
        t = np.asarray(t, dtype=complex)
        if t.ndim == 1:
            t = t[:, None]
        return cls(domain, np.column_stack([t, domain.points]))

    @property
    def n(self) -> int:
        return self.values.shape[1]

    @property
    def fibre(self) -> np.ndarray:
        return self.values[:, :-1]

    def restrict(self, sub: DiscretizedCompact) -> "SectionChart":
        idx = self.domain.locate(sub)
        if np.any(idx < 0):
            raise GeometryError("restriction target is not a subset of the section's domain")
        return SectionChart(sub, self.values[idx])


# ---------------------------------------------------------------------------
# right inverse of the linearised gluing map


class RightInverse:
    """``S(g) = (-gamma1^-1 T1(gamma2^-1 j g), gamma2 T2(gamma2^-1 j g))``.

    ``g`` takes values in C^(n-1) on K12; ``j`` appends a zero coordinate.
    """

    def __init__(self, split: CartanSplit, ctx: GoodPairContext, splitter: AdditiveSplitter):
        self.ctx = ctx
        self.split = split
        self.splitter = splitter
        self.g1inv = batch_inv(split.gamma1.matrices)
        self.g2 = split.gamma2.matrices
        self.g2inv12 = batch_inv(self.g2[ctx.k2.locate(ctx.k12)])
        self.gamma12 = (split.gamma2.matrices[ctx.k2.locate(ctx.k12)]
                        @ split.gamma1.matrices[ctx.k1.locate(ctx.k12)])
        self.n = self.g2.shape[1]
        self._probe = None

    def apply(self, g: np.ndarray):
        g = np.asarray(g, dtype=complex)
        if g.ndim == 1:
            g = g[:, None]
        jg = np.column_stack([g, np.zeros(len(g))])
        y = np.einsum("kij,kj->ki", self.g2inv12, jg)
        y[:, -1] = 0.0
        t1, t2, *_ = self.splitter.apply(y)
        v1 = -np.einsum("kij,kj->ki", self.g1inv, t1)
        v2 = np.einsum("kij,kj->ki", self.g2, t2)
        v1[:, -1] = 0.0
        v2[:, -1] = 0.0
        return v1, v2

    def norm_bound(self) -> float:
        """``||T|| ||gamma2^-1|| max(||gamma1^-1||, ||gamma2||)`` in the sup norm."""
        t = self.splitter.norm_bound()
        a = float(opnorm_inf(self.g2inv12).max())
        b = max(float(opnorm_inf(self.g1inv).max()), float(opnorm_inf(self.g2).max()))
        return t * a * b

    def derivative_apply(self, gamma: np.ndarray, v1: np.ndarray, v2: np.ndarray) -> np.ndarray:
        """``pi[v2 - gamma v1]`` on K12 for a Jacobian field ``gamma``."""
        a = v2[self.ctx.k2.locate(self.ctx.k12)]
        b = np.einsum("kij,kj->ki", gamma, v1[self.ctx.k1.locate(self.ctx.k12)])
        return (a - b)[:, :-1]

    def probe(self, P: InterpolationSet | None = None, n: int = 20, seed: int = 0) -> tuple[float, float]:
        """Random probes: (max relative right-inverse defect, max ||S g|| / ||g||)."""
        if self._probe is not None:
            return self._probe
        rng = np.random.default_rng(seed)
        k12 = self.ctx.k12
        idx = (P or InterpolationSet()).within(k12).snap(k12)
        defect = 0.0
        ratio = 0.0
        for _ in range(n):
            g = rng.normal(size=(len(k12), self.n - 1)) + 1j * rng.normal(size=(len(k12), self.n - 1))
            if len(idx):
                lp = lagrange_interpolate(k12.points[idx], g[idx])
                g = g - lp(k12.points)
                g[idx] = 0.0
            gn = float(np.abs(g).max())
            v1, v2 = self.apply(g)
            back = self.derivative_apply(self.gamma12, v1, v2)
            defect = max(defect, float(np.abs(back - g).max()) / gn)
            ratio = max(ratio, max(float(np.abs(v1).max()), float(np.abs(v2).max())) / gn)
        self._probe = (defect, ratio)
        return self._probe


def build_rhs_inverse(gamma1: GroupMapSample, gamma2: GroupMapSample, ctx: GoodPairContext,
                      P: InterpolationSet | None = None, tol: float = 1e-7,
                      splitter: AdditiveSplitter | None = None) -> RightInverse:
    """Right inverse of ``(v1, v2) -> pi[v2 - gamma2 gamma1 v1]``, probe-verified."""
    splitter = AdditiveSplitter(ctx, P) if splitter is None else splitter
    split = CartanSplit(gamma1, gamma2, 0.0, 0)
    S = RightInverse(split, ctx, splitter)
    defect, _ = S.probe(P)
    if defect > tol:
        raise PatchingError(f"right-inverse probe defect {defect:.3g} exceeds {tol:.3g}")
    return S


# ---------------------------------------------------------------------------
# nonlinear patching


@dataclass(frozen=True, eq=False)
class PatchResult:
    v1: SampledMap
    v2: SampledMap
    residual: float
    iterations: int
    s_norm: float
    delta: float
    theta: float
    initial_mismatch: float
    newton_residuals: list
    cartan_iterations: int


def _fibre_lipschitz_radius(F: TransitionMap, base: np.ndarray, limit: float, seed: int = 0) -> float:
    """Largest probed radius on which ``||F'(base + w) - F'(base)|| < limit``."""
    if F.fibre_affine:
        return math.inf
    rng = np.random.default_rng(seed)
    J0 = F.jac(base)
    rho = 1.0
    for _ in range(60):
        worst = 0.0
        for _ in range(8):
            w = rng.normal(size=base.shape) + 1j * rng.normal(size=base.shape)
            w[:, -1] = 0.0
            w *= rho / np.abs(w).max()
            Z = base + w
            if not F.domain_mask(Z).all():
                worst = math.inf
                break
            worst = max(worst, float(opnorm_inf(F.jac(Z) - J0).max()))
        if worst < limit:
            return rho
        rho *= 0.5
    return 0.0


def patch_sections(u1: SectionChart, u2: SectionChart, F: TransitionMap, ctx: GoodPairContext,
                   P: InterpolationSet | None = None, epsilon: float = 0.1,
                   mode: str = "frozen", tol: float | None = None,
                   splitter: AdditiveSplitter | None = None,
                   check_delta: bool = True, prepared: CartanSplit | None = None) -> PatchResult:
    """Solve ``u2 + v2 = F(u1 + v1)`` on K12 with ``||v_j|| <= epsilon``.

    The corrections vanish on P and have zero last coordinate.  The required
    closeness ``||u2 - F(u1)|| < delta`` on K12 is computed from the norm of
    the right inverse: ``delta = epsilon / ||S||`` when F is affine along the
    fibre (then one step solves exactly) and ``min(theta, epsilon) / (8 C)``
    with ``C = 2 ||S||`` otherwise.
    """
    P = InterpolationSet() if P is None else P
    k12 = ctx.k12
    if len(u1.domain) != len(ctx.k1) or len(u2.domain) != len(ctx.k2):
        u1 = u1.restrict(ctx.k1)
        u2 = u2.restrict(ctx.k2)
    i1 = ctx.k1.locate(k12)
    i2 = ctx.k2.locate(k12)
    base = u1.values[i1]
    if not F.domain_mask(base).all():
        raise PatchingError("u1(K12) leaves the domain of the transition map")
    scale = 1.0 + float(np.abs(u2.values[i2]).max(initial=0.0))
    mismatch = (u2.values[i2] - F(base))[:, :-1]
    p12 = P.within(k12).snap(k12)
    if len(p12) and np.abs(mismatch[p12]).max() > 1e-10 * scale:
        raise PatchingError("u2 does not equal F(u1) on the interpolation set")
    splitter = AdditiveSplitter(ctx, P) if splitter is None else splitter
    gamma = GroupMapSample(k12, F.jac(base))
    cs = prepared if prepared is not None else split_multiplicative(
        gamma, ctx, splitter=AdditiveSplitter(ctx))
    S0 = RightInverse(cs, ctx, splitter)
    s_norm = S0.norm_bound()
    C = s_norm if F.fibre_affine else 2.0 * s_norm
    theta = _fibre_lipschitz_radius(F, base, 1.0 / (8.0 * s_norm))
    delta = epsilon / s_norm if math.isinf(theta) else min(theta, epsilon) / (8.0 * C)
    d0 = float(np.abs(mismatch).max(initial=0.0))
    if check_delta and d0 >= delta:
        raise PatchingError(f"initial mismatch {d0:.3g} is not below delta = {delta:.3g}")
    tol = 1e-11 * scale if tol is None else tol

    def evaluate(x):
        w1, w2 = x
        return ((u2.values[i2] + w2[i2]) - F(base + w1[i1]))[:, :-1]

    cache = {"S": S0, "warm": (cs.gamma1, cs.gamma2), "cartan": cs.iterations}

    def derivative_solve(x, rhs):
        if mode == "frozen" or x is None:
            S = S0
        else:
            w1 = x[0]
            g = GroupMapSample(k12, F.jac(base + w1[i1]))
            csx = split_multiplicative(g, ctx, splitter=AdditiveSplitter(ctx), warm=cache["warm"])
            cache["warm"] = (csx.gamma1, csx.gamma2)
            cache["cartan"] += csx.iterations
            S = RightInverse(csx, ctx, splitter)
        # Phi(x + u) ~ Phi(x) - pi[gamma v1 - v2]: a right inverse of Phi' maps rhs to u
        return S.apply(rhs)

    zero = (np.zeros_like(u1.values), np.zeros_like(u2.values))
    prob = OperatorProblem(
        evaluate=evaluate,
        derivative_solve=lambda x, r: derivative_solve(None if x is zero else x, r),
        center=zero, radius=epsilon, bound=C, linear=F.fibre_affine,
        norm=lambda x: max(float(np.abs(x[0]).max(initial=0.0)), float(np.abs(x[1]).max(initial=0.0))),
        add=lambda x, u: (x[0] + u[0], x[1] + u[1]),
        sub=lambda a, b: (a[0] - b[0], a[1] - b[1]) if isinstance(a, tuple) else a - b,
    )
    res = solve_surjective(prob, np.zeros_like(mismatch), tol=tol, mode=mode)
    v1, v2 = res.x
    v1 = v1.copy()
    v2 = v2.copy()
    v1[:, -1] = 0.0
    v2[:, -1] = 0.0
    p1 = P.within(ctx.k1).snap(ctx.k1)
    p2 = P.within(ctx.k2).snap(ctx.k2)
    v1[p1] = 0.0
    v2[p2] = 0.0
    glue = float(np.abs((u2.values[i2] + v2[i2]) - F(base + v1[i1])).max(initial=0.0))
    vmax = max(float(np.abs(v1).max(initial=0.0)), float(np.abs(v2).max(initial=0.0)))
    if vmax > epsilon:
        raise PatchingError(f"corrections have norm {vmax:.3g} > epsilon = {epsilon:.3g}")
    return PatchResult(SampledMap(ctx.k1, v1), SampledMap(ctx.k2, v2), glue, res.iterations,
                       s_norm, delta, theta, d0, res.residuals, cache["cartan"])


# ---------------------------------------------------------------------------
# gluing a section across a good pair


def complement_connected(comp: DiscretizedCompact) -> bool:
    """Whether the lattice complement of ``comp`` in a padded box is connected."""
    if not len(comp):
        return True
    h = comp.h
    ij = np.rint(np.column_stack([comp.points.real, comp.points.imag]) / h).astype(int)
    lo = ij.min(axis=0) - 2
    hi = ij.max(axis=0) + 2
    grid = np.ones(tuple(hi - lo + 1), dtype=bool)
    grid[ij[:, 0] - lo[0], ij[:, 1] - lo[1]] = False
    _, count = ndimage.label(grid)
    return count == 1


@dataclass(frozen=True, eq=False)
class FitReport:
    degrees: list
    errors: list
    cr_max: float


def taylor_extension(zd: np.ndarray, fd: np.ndarray, ze: np.ndarray, h: float,
                     radius: float = 3.0) -> np.ndarray:
    """Second-order holomorphic extrapolation from the nearest data sample.

    ``f(s) + a (e - s) + b (e - s)^2 / 2`` where ``a, b`` are the complex
    least-squares Taylor coefficients over the data within ``radius * h``
    of ``s`` (first order only when the neighbourhood is too small).
    """
    tree = cKDTree(np.column_stack([zd.real, zd.imag]))
    _, nn = tree.query(np.column_stack([ze.real, ze.imag]))
    uniq = np.unique(nn)
    near = tree.query_ball_point(np.column_stack([zd[uniq].real, zd[uniq].imag]), radius * h)
    m = fd.shape[1]
    c1 = np.zeros((len(zd), m), dtype=complex)
    c2 = np.zeros((len(zd), m), dtype=complex)
    for s, nb in zip(uniq, near):
        nb = np.asarray([k for k in nb if k != s], dtype=int)
        if not len(nb):
            continue
        dz = zd[nb] - zd[s]
        A = np.column_stack([dz, 0.5 * dz ** 2])
        coef, _, rank, _ = np.linalg.lstsq(A, fd[nb] - fd[s], rcond=1e-8)
        if rank == 2:
            c1[s], c2[s] = coef[0], coef[1]
        else:
            c1[s] = (np.conj(dz)[:, None] * (fd[nb] - fd[s])).sum(axis=0) / np.sum(np.abs(dz) ** 2)
    d = (ze - zd[nn])[:, None]
    return fd[nn] + c1[nn] * d + 0.5 * c2[nn] * d ** 2


def _exact_low_degree(comp, have, fd, ext, pidx, pvals, target, ladder, max_degree=6):
    """A data-only fit of degree <= ``max_degree`` that reproduces the data to rounding.

    Polynomial data is its own holomorphic extension; the weighted fit with
    a Taylor-extrapolated padding would only perturb it.  The candidate must
    also stay within ``target`` of the padding where no data is given.
    """
    zd = comp.points[have]
    tol = 1e-11 * (1.0 + float(np.abs(fd).max(initial=0.0)))
    for deg in ladder:
        if deg > max_degree or (deg > len(zd) - 1 and deg > 0):
            break
        approx = fit_polynomial(zd, fd, deg)(comp.points)
        if len(pidx):
            approx = approx + lagrange_interpolate(comp.points[pidx], pvals - approx[pidx])(comp.points)
            approx[pidx] = pvals
        err = float(np.abs(approx[have] - fd).max())
        if err > tol:
            continue
        if ext is not None and np.abs(approx[~have] - ext[1]).max() > target:
            return None
        return err, deg, approx
    return None


_DEGREE_LADDER = (0, 1, 2, 3, 4, 5, 6, 8, 10, 12, 15, 18, 22, 26, 30, 35, 40, 46, 52, 60, 70, 80)


def fit_holomorphic(values: np.ndarray, data_domain: DiscretizedCompact,
                    target_domain: DiscretizedCompact, target: float, P: InterpolationSet,
                    max_degree: int = 60, cr_budget: float | None = None,
                    check_complement: bool = True, lawson_iters: int = 0,
                    extension_weight: float = 0.25) -> tuple[np.ndarray, FitReport]:
    """Polynomial approximation, one polynomial per component of ``target_domain``.

    Fits ``values`` (given on ``data_domain``, a subset of ``target_domain``)
    by the lowest-degree polynomial whose sup error on the data is at most
    ``target``; then corrects by Lagrange interpolation so the result equals
    the data on P.  Returns the values on ``target_domain``.

    Samples of ``target_domain`` without data enter the least-squares problem
    with a Taylor extrapolation of the data (see :func:`taylor_extension`)
    and weight ``extension_weight``.  This keeps the polynomial tame where no
    data is prescribed.  If the target is missed the weight is relaxed in
    steps down to a data-only fit.  With ``cr_budget`` set, a fit is only
    accepted when its discrete dbar on the component stays within budget.
    """
    vals = np.asarray(values, dtype=complex)
    if vals.ndim == 1:
        vals = vals[:, None]
    out = np.zeros((len(target_domain), vals.shape[1]), dtype=complex)
    in_data = data_domain.locate(target_domain)
    degrees, errors = [], []
    cr_max = 0.0
    ladder = [d for d in _DEGREE_LADDER if d <= max_degree]
    if ladder[-1] != max_degree:
        ladder.append(max_degree)
    for lab in range(target_domain.n_components):
        mask = target_domain.labels == lab
        comp = target_domain.subset(mask)
        sel = in_data[mask]
        have = sel >= 0
        if not have.any():
            # nothing to approximate there; any holomorphic function will do
            degrees.append(0)
            errors.append(0.0)
            continue
        if check_complement and comp.weights.sum() > 0 and not complement_connected(comp):
            raise FitError("fit component has holes; polynomial approximation is not available")
        zd = comp.points[have]
        fd = vals[sel[have]]
        ext = None
        if (~have).any() and extension_weight > 0:
            ze = comp.points[~have]
            ext = (ze, taylor_extension(zd, fd, ze, comp.h))
        pts = P.within(comp)
        pidx = pts.snap(comp) if len(pts) else np.zeros(0, int)
        dp = data_domain.locate(comp.points[pidx]) if len(pidx) else np.zeros(0, int)
        weights = [extension_weight * 0.2 ** k for k in range(3)] + [0.0] if ext else [0.0]
        best = _exact_low_degree(comp, have, fd, ext, pidx, vals[dp], target, ladder)
        if best is not None:
            weights = []
        for wext in weights:
            if wext > 0:
                zall = np.concatenate([zd, ext[0]])
                fall = np.concatenate([fd, ext[1]])
                wall = np.concatenate([np.ones(len(zd)), np.full(len(ext[0]), wext)])
            else:
                zall, fall, wall = zd, fd, None
            done = False
            for deg in ladder:
                if deg > len(zd) - 1 and deg > 0:
                    break
                fit = fit_polynomial(zall, fall, deg, weights=wall, lawson_iters=lawson_iters)
                approx = fit(comp.points)
                if len(pidx):
                    # interpolation correction keeps the result polynomial
                    lp = lagrange_interpolate(comp.points[pidx], vals[dp] - approx[pidx])
                    approx = approx + lp(comp.points)
                    approx[pidx] = vals[dp]
                err = float(np.abs(approx[have] - fd).max())
                if err <= target and cr_budget is not None:
                    if cr_residual(SampledMap(comp, approx)).max > cr_budget:
                        continue
                if best is None or err < best[0]:
                    best = (err, deg, approx)
                if err <= target:
                    done = True
                    break
            if done:
                break
        err, deg, approx = best
        if err > target:
            raise FitError(f"polynomial fit reached {err:.3g} on a component (target {target:.3g}, "
                           f"degree {deg})")
        if cr_budget is not None:
            cr = cr_residual(SampledMap(comp, approx))
            cr_max = max(cr_max, cr.max)
            if cr.max > cr_budget:
                raise FitError(f"fit of degree {deg} has discrete dbar {cr.max:.3g} > {cr_budget:.3g}")
        out[mask] = approx
        degrees.append(deg)
        errors.append(err)
    return out, FitReport(degrees, errors, cr_max)


@dataclass(frozen=True, eq=False)
class GlueResult:
    section1: SectionChart
    section2: SectionChart
    ctx: GoodPairContext
    patch: PatchResult
    fit: FitReport
    deviation: float


def glue_good_pair(u1: SectionChart, w2: SectionChart, F: TransitionMap, k1: DiscretizedCompact,
                   k2: DiscretizedCompact, B: DiscretizedCompact, P: InterpolationSet | None = None,
                   eta: float = 0.05, max_degree: int = 60, mode: str = "frozen",
                   ctx: GoodPairContext | None = None, fit_domain: DiscretizedCompact | None = None,
                   lawson_iters: int = 0, extension_weight: float = 0.25,
                   cr_budget: float | None = None) -> GlueResult:
    """Approximate a section by one holomorphic near ``K2 n B``.

    ``u1`` is the section over K1 in chart 1, ``w2`` over K2 in chart 2, with
    ``w2 = F(u1)`` on K12.  The chart-2 part is replaced by polynomials on
    the components of ``K2 u B`` and the mismatch on K12 is removed by
    :func:`patch_sections`.  The result stays within ``eta`` of the input
    and agrees with it on P.
    """
    P = InterpolationSet() if P is None else P
    if len(B) and np.any(k1.locate(B) >= 0):
        raise GeometryError("B must be disjoint from K1")
    k2b = k2.union(B) if len(B) else k2
    if ctx is None:
        ctx = validate_good_pair(k1, k2b)
    splitter = AdditiveSplitter(ctx, P)
    i1 = ctx.k1.locate(ctx.k12)
    base = u1.restrict(ctx.k1).values[i1]
    gamma = GroupMapSample(ctx.k12, F.jac(base))
    cs = split_multiplicative(gamma, ctx, splitter=AdditiveSplitter(ctx))
    s_norm = RightInverse(cs, ctx, splitter).norm_bound()
    eps_v = eta / 2
    theta = _fibre_lipschitz_radius(F, base, 1.0 / (8.0 * s_norm))
    delta = eps_v / s_norm if math.isinf(theta) else min(theta, eps_v) / (16.0 * s_norm)
    target = min(0.5 * delta, 0.5 * eta)
    fit_vals, report = fit_holomorphic(w2.fibre, k2, fit_domain or k2b, target, P,
                                       max_degree=max_degree, lawson_iters=lawson_iters,
                                       extension_weight=extension_weight, cr_budget=cr_budget)
    if fit_domain is not None:
        fit_vals = fit_vals[fit_domain.locate(k2b)]
    u2 = SectionChart.from_fibre(k2b, fit_vals)
    patch = patch_sections(u1.restrict(ctx.k1), u2, F, ctx, P, eps_v, mode=mode, splitter=splitter,
                           prepared=cs)
    s1 = SectionChart(ctx.k1, u1.restrict(ctx.k1).values + patch.v1.values)
    s2 = SectionChart(k2b, u2.values + patch.v2.values)
    dev2 = float(np.abs(s2.restrict(k2).values - w2.restrict(k2).values).max(initial=0.0))
    dev = max(dev2, float(np.abs(patch.v1.values).max(initial=0.0)))
    return GlueResult(s1, s2, ctx, patch, report, dev)
