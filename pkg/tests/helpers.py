"""Shared fixtures geometry for the test modules."""

import numpy as np
from scipy.spatial import cKDTree

from holopatch.compacts import SetPrimitive, build_compact


def disk_pair(h):
    """Union of the unit disks at -0.5 and 0.5, cut at x = 0.25 and x = -0.25."""
    U = build_compact([SetPrimitive.disk(-0.5, 1.0), SetPrimitive.disk(0.5, 1.0)], h)
    tol = 1e-9 * h
    return U.subset(U.points.real <= 0.25 + tol), U.subset(U.points.real >= -0.25 - tol)


def far_from_band(ctx, k, factor=4.0):
    """Samples of ``k`` at distance >= factor*h from the support of dbar(chi)."""
    band = ctx.k12.points[np.abs(ctx.dbar_chi) > 0]
    d, _ = cKDTree(np.column_stack([band.real, band.imag])).query(
        np.column_stack([k.points.real, k.points.imag]))
    return d >= factor * k.h


# acceptance verdicts, printed in the terminal summary
ACCEPTANCE = {}
