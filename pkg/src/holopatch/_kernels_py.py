"""Pure-numpy kernels. Same contracts as the compiled ``_ckernels`` module."""

import numpy as np

_BLOCK = 2048


def square_cell_integral(w0, h):
    """Integral of ``1/(z - zeta)`` over the h-by-h square centred at ``z + w0``.

    ``w0`` is the (complex) offset of the cell centre from the target.  Uses
    Green's formula on ``-conj(w)/w`` so the result is exact for any target,
    including one sitting at the cell centre (where it vanishes).
    """
    w0 = np.asarray(w0, dtype=complex)
    half = 0.5 * h
    corners = [w0 + half * (-1 - 1j), w0 + half * (1 - 1j),
               w0 + half * (1 + 1j), w0 + half * (-1 + 1j)]
    total = np.zeros(w0.shape, dtype=complex)
    for k in range(4):
        a = corners[k]
        d = corners[(k + 1) % 4] - a
        total += _edge_term(a, d)
    return -total / 2j


def _edge_term(a, d):
    # int_0^1 conj(a + t d)/(a + t d) d dt
    with np.errstate(divide="ignore", invalid="ignore"):
        coef = np.conj(a) - a * np.conj(d) / d
        ratio = (a + d) / a
        lg = np.log(ratio)
    small = np.abs(a) < 1e-300
    lg = np.where(small, 0.0, lg)
    coef = np.where(small, 0.0, coef)
    # end point at the origin: coef*log -> 0 like x log x
    end0 = np.abs(a + d) < 1e-300
    lg = np.where(end0, 0.0, lg)
    return np.conj(d) + coef * lg


def cauchy_sum(sources, density, weights, targets, h, near):
    """Return ``sum_s density_s w_s K(t, s)`` for every target.

    ``K = 1/(t - s)`` in the far field; when ``|t - s| < near`` the point mass
    is replaced by the exact cell integral scaled by ``w_s / h**2``.  The
    ``1/pi`` normalisation is left to the caller.
    """
    sources = np.asarray(sources, dtype=complex)
    targets = np.asarray(targets, dtype=complex)
    q = np.asarray(density, dtype=complex) * np.asarray(weights, dtype=float)
    out = np.zeros(targets.shape[0], dtype=complex)
    if sources.size == 0 or targets.size == 0:
        return out
    area = h * h
    for start in range(0, targets.shape[0], _BLOCK):
        t = targets[start:start + _BLOCK]
        diff = t[:, None] - sources[None, :]
        dist = np.abs(diff)
        close = dist < near
        with np.errstate(divide="ignore", invalid="ignore"):
            kern = np.where(close, 0.0, 1.0 / diff)
        if close.any():
            ti, si = np.nonzero(close)
            kern[ti, si] = square_cell_integral(-diff[ti, si], h) / area
        out[start:start + _BLOCK] = kern @ q
    return out


def cauchy_rowsum_bound(sources, density_abs, weights, targets, h, near):
    """Max over targets of ``sum_s |density_s| w_s |K(t, s)|``."""
    sources = np.asarray(sources, dtype=complex)
    targets = np.asarray(targets, dtype=complex)
    q = np.asarray(density_abs, dtype=float) * np.asarray(weights, dtype=float)
    if sources.size == 0 or targets.size == 0:
        return 0.0
    best = 0.0
    area = h * h
    for start in range(0, targets.shape[0], _BLOCK):
        t = targets[start:start + _BLOCK]
        diff = t[:, None] - sources[None, :]
        dist = np.abs(diff)
        close = dist < near
        with np.errstate(divide="ignore", invalid="ignore"):
            kern = np.where(close, 0.0, 1.0 / dist)
        if close.any():
            ti, si = np.nonzero(close)
            kern[ti, si] = np.abs(square_cell_integral(-diff[ti, si], h)) / area
        best = max(best, float((kern @ q).max()))
    return best
