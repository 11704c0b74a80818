"""Bounded additive splitting f = T1 f + T2 f on the overlap of a good pair."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .compacts import GoodPairContext
from .dbar import CauchyKernelPlan, cauchy_bound, cauchy_transform
from .spaces import (InterpolationError, InterpolationSet, LagrangePolynomial,
                     SampledMap, lagrange_interpolate, lebesgue_constant, sup_norm)

VANISH_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class AdditiveSplit:
    """Result of splitting one map.

    ``t1`` lives on K1, ``t2`` on K2, ``lam = f * dbar(chi)`` on K12 and
    ``big_lambda`` (its Cauchy transform) on K1 u K2.
    """

    t1: SampledMap
    t2: SampledMap
    lam: SampledMap
    q: LagrangePolynomial
    big_lambda: SampledMap
    operator_norm_estimate: float


class AdditiveSplitter:
    """Linear operators T1, T2 for a fixed good pair and interpolation set.

    ``T1 f = (1 - chi) f + Lambda_f - q_f`` on K1 and
    ``T2 f = chi f - Lambda_f + q_f`` on K2, where ``Lambda_f`` is the Cauchy
    transform of ``f dbar(chi)`` and ``q_f`` interpolates ``Lambda_f`` on P.
    Both vanish on P and are holomorphic wherever f is.
    """

    def __init__(self, ctx: GoodPairContext, P: InterpolationSet | None = None):
        self.ctx = ctx
        P = InterpolationSet() if P is None else P
        self.P = P.within(ctx.union)
        self.p_union = self.P.snap(ctx.union)
        self.p_k12 = self.P.within(ctx.k12).snap(ctx.k12)
        u = ctx.union
        self.i1 = u.locate(ctx.k1)
        self.i2 = u.locate(ctx.k2)
        self.i12 = u.locate(ctx.k12)  # K12 samples inside the union
        self.chi1 = ctx.chi[self.i1]
        self.chi2 = ctx.chi[self.i2]
        # k12 index of each K1 / K2 sample, -1 off the overlap
        self.k1_in12 = ctx.k12.locate(ctx.k1)
        self.k2_in12 = ctx.k12.locate(ctx.k2)
        self.plan = CauchyKernelPlan(ctx.k12, u.points)
        self.nodes = u.points[self.p_union]
        self._norm = None

    # raw array interface (values on K12, shape (N12, m))
    def apply(self, values: np.ndarray):
        ctx = self.ctx
        f = np.asarray(values, dtype=complex)
        if f.ndim == 1:
            f = f[:, None]
        lam = f * ctx.dbar_chi[:, None]
        big = cauchy_transform(SampledMap(ctx.k12, lam), self.plan)
        if len(self.nodes):
            q = lagrange_interpolate(self.nodes, big[self.p_union], m=f.shape[1])
            qv = q(ctx.union.points)
            # exact at the nodes
            qv[self.p_union] = big[self.p_union]
        else:
            q = lagrange_interpolate([], [], m=f.shape[1])
            qv = np.zeros_like(big)
        corr = big - qv
        t1 = corr[self.i1].copy()
        on = self.k1_in12 >= 0
        t1[on] += (1 - self.chi1[on])[:, None] * f[self.k1_in12[on]]
        t2 = -corr[self.i2]
        on = self.k2_in12 >= 0
        t2[on] += self.chi2[on][:, None] * f[self.k2_in12[on]]
        return t1, t2, lam, q, big

    def split(self, f: SampledMap, check: bool = True) -> AdditiveSplit:
        ctx = self.ctx
        if len(f.domain) != len(ctx.k12):
            f = f.restrict(ctx.k12)
        nrm = sup_norm(f) if len(f.domain) else 0.0
        if check and len(self.p_k12):
            bad = np.abs(f.values[self.p_k12]).max()
            if bad > VANISH_TOL * max(nrm, 1.0):
                raise InterpolationError(
                    f"f does not vanish on the interpolation set (|f(p)| = {bad:.3g})")
        t1, t2, lam, q, big = self.apply(f.values)
        return AdditiveSplit(SampledMap(ctx.k1, t1), SampledMap(ctx.k2, t2),
                             SampledMap(ctx.k12, lam), q, SampledMap(ctx.union, big),
                             self.norm_bound())

    def norm_bound(self) -> float:
        """Rigorous (discrete) bound on max(||T1||, ||T2||) in the sup norm.

        ``||T_j f|| <= (1 + B (1 + C_P)) ||f||`` with ``B`` the exact row-sum
        bound of the Cauchy transform of ``dbar(chi)`` and ``C_P`` the
        Lebesgue constant of the interpolation nodes.
        """
        if self._norm is None:
            ctx = self.ctx
            B = cauchy_bound(np.abs(ctx.dbar_chi), ctx.k12, ctx.union.points)
            cp = lebesgue_constant(self.P, ctx.union) if len(self.P) else 0.0
            self._norm = 1.0 + B * (1.0 + cp)
        return self._norm

    def empirical_norm(self, n: int = 20, seed: int = 0, degree: int = 6) -> float:
        """max(||T1 f||, ||T2 f||) over random P-vanishing polynomials with ||f|| = 1."""
        rng = np.random.default_rng(seed)
        z = self.ctx.k12.points
        c = z.mean()
        r = np.abs(z - c).max() or 1.0
        best = 0.0
        for _ in range(n):
            coef = rng.normal(size=degree + 1) + 1j * rng.normal(size=degree + 1)
            vals = np.polyval(coef, (z - c) / r)
            if len(self.p_k12):
                pv = vals[self.p_k12]
                lp = lagrange_interpolate(z[self.p_k12], pv)
                vals = vals - lp(z).ravel()
                vals[self.p_k12] = 0
            vals = vals / np.abs(vals).max()
            t1, t2, *_ = self.apply(vals)
            best = max(best, float(np.abs(t1).max()), float(np.abs(t2).max()))
        return best


def split_additive(f: SampledMap, ctx: GoodPairContext,
                   P: InterpolationSet | None = None) -> AdditiveSplit:
    """One-shot ``T1 f, T2 f`` for ``f`` on the overlap K12."""
    return AdditiveSplitter(ctx, P).split(f)
