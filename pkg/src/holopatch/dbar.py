"""Discrete Cauchy transform solving dbar(Lambda) = lambda on the plane."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from . import kernels
from .compacts import DiscretizedCompact, GeometryError
from .spaces import SampledMap

NEAR_FACTOR = 1.5
POLICIES = ("cell_closed_form", "skip")


@dataclass(frozen=True, eq=False)
class CauchyKernelPlan:
    """Sources (support of lambda), targets and the near-cell policy.

    With ``cell_closed_form`` a source whose h x h cell lies within
    ``1.5 h`` of the target is integrated exactly over its cell instead of
    being treated as a point mass.
    """

    source: DiscretizedCompact
    targets: np.ndarray
    policy: str = "cell_closed_form"

    def __post_init__(self):
        t = np.atleast_1d(np.asarray(self.targets, dtype=complex))
        if len(t) == 0:
            raise ValueError("target list must be nonempty")
        if self.policy not in POLICIES:
            raise ValueError(f"unknown singular-cell policy {self.policy!r}")
        object.__setattr__(self, "targets", t)

    @property
    def near(self) -> float:
        return NEAR_FACTOR * self.source.h if self.policy == "cell_closed_form" else 0.0


def cauchy_transform(lam: SampledMap, plan: CauchyKernelPlan) -> np.ndarray:
    """(1/pi) sum over sources of lam * w / (z - zeta), shape (targets, m).

    The orientation is fixed so that dbar of the result equals ``lam``:
    for ``lam = 1`` on the unit disk this gives ``conj(z)`` inside and
    ``1/z`` outside.
    """
    src = plan.source
    vals = lam.values
    if vals.shape[0] != len(src):
        raise ValueError("lambda must be sampled on the plan's source")
    active = (src.weights > 0) & np.any(vals != 0, axis=1)
    out = np.zeros((len(plan.targets), vals.shape[1]), dtype=complex)
    if not active.any():
        return out
    s = np.ascontiguousarray(src.points[active])
    w = np.ascontiguousarray(src.weights[active])
    if plan.policy == "skip":
        d, _ = cKDTree(np.column_stack([s.real, s.imag])).query(
            np.column_stack([plan.targets.real, plan.targets.imag]))
        if np.any(d < 1e-12 * max(src.h, 1.0)):
            warnings.warn("targets coincide with source samples; those terms are skipped",
                          RuntimeWarning, stacklevel=2)
    for c in range(vals.shape[1]):
        dens = np.ascontiguousarray(vals[active, c])
        if not dens.any():
            continue
        out[:, c] = kernels.cauchy_sum(s, dens, w, plan.targets, src.h, plan.near) / math.pi
    return out


def cauchy_bound(lam_abs: np.ndarray, source: DiscretizedCompact, targets: np.ndarray,
                 policy: str = "cell_closed_form") -> float:
    """Exact sup over targets of (1/pi) sum |kernel| * |lam| * w."""
    plan = CauchyKernelPlan(source, targets, policy)
    active = (source.weights > 0) & (lam_abs > 0)
    if not active.any():
        return 0.0
    return float(kernels.cauchy_rowsum_bound(
        np.ascontiguousarray(source.points[active]), np.ascontiguousarray(lam_abs[active]),
        np.ascontiguousarray(source.weights[active]), plan.targets, source.h, plan.near) / math.pi)


def solve_dbar(lam: SampledMap, grid: DiscretizedCompact, margin: float | None = None,
               policy: str = "cell_closed_form") -> SampledMap:
    """Cauchy transform of ``lam`` on every sample of ``grid``.

    ``grid`` must contain the support of ``lam`` with a margin of ``4h``.
    """
    h = grid.h
    margin = 4 * h if margin is None else margin
    src = lam.domain
    supp = np.any(lam.values != 0, axis=1)
    if supp.any():
        inside = grid.locate(src.points[supp]) >= 0
        if not inside.all():
            raise GeometryError("grid does not contain the support of lambda")
        probe = supp.nonzero()[0]
        sp = src.points[probe]
        gt = grid.tree()
        for step in (margin * np.exp(2j * np.pi * k / 8) for k in range(8)):
            d, _ = gt.query(np.column_stack([(sp + step).real, (sp + step).imag]))
            if np.any(d > h * 0.75):
                raise GeometryError(f"grid margin around supp(lambda) is below {margin:.3g}")
    plan = CauchyKernelPlan(src, grid.points, policy)
    return SampledMap(grid, cauchy_transform(lam, plan))
