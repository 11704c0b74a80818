# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Cauchy-kernel sums. Mirrors ``holopatch._kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, log, atan2

cnp.import_array()


cdef inline void _edge(double ar, double ai, double dr, double di,
                       double *outr, double *outi) noexcept nogil:
    # int_0^1 conj(a + t d)/(a + t d) d dt = conj(d) + (conj(a) - a conj(d)/d) Log((a+d)/a)
    cdef double dd = dr * dr + di * di
    cdef double qr, qi, cr, ci, br, bi, na, nb, lr, li
    outr[0] = dr
    outi[0] = -di
    na = ar * ar + ai * ai
    br = ar + dr
    bi = ai + di
    nb = br * br + bi * bi
    # squared moduli: |a| < 1e-150 counts as an endpoint at the target
    if na < 1e-300 or nb < 1e-300:
        return
    # a*conj(d)/d
    qr = (ar * dr + ai * di)
    qi = (ai * dr - ar * di)
    # (a conj(d)) / d = (a conj(d)) conj(d) / |d|^2
    cr = (qr * dr + qi * di) / dd
    ci = (qi * dr - qr * di) / dd
    cr = ar - cr
    ci = -ai - ci
    # Log(b/a) = log|b|/|a| + i arg(b conj(a))
    lr = 0.5 * log(nb / na)
    li = atan2(bi * ar - br * ai, br * ar + bi * ai)
    outr[0] += cr * lr - ci * li
    outi[0] += cr * li + ci * lr


cdef inline void _cell(double wr, double wi, double h,
                       double *outr, double *outi) noexcept nogil:
    cdef double half = 0.5 * h
    cdef double xs[5]
    cdef double ys[5]
    cdef double sr = 0.0, si = 0.0, er, ei
    cdef int k
    xs[0] = wr - half; ys[0] = wi - half
    xs[1] = wr + half; ys[1] = wi - half
    xs[2] = wr + half; ys[2] = wi + half
    xs[3] = wr - half; ys[3] = wi + half
    xs[4] = xs[0]; ys[4] = ys[0]
    for k in range(4):
        _edge(xs[k], ys[k], xs[k + 1] - xs[k], ys[k + 1] - ys[k], &er, &ei)
        sr += er
        si += ei
    # -(sum)/(2i) = (i/2) sum
    outr[0] = -0.5 * si
    outi[0] = 0.5 * sr


def square_cell_integral(w0, double h):
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] w = np.ascontiguousarray(
        np.atleast_1d(np.asarray(w0, dtype=complex)).ravel())
    cdef Py_ssize_t n = w.shape[0], i
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.empty(n, dtype=complex)
    cdef double r, im
    for i in range(n):
        _cell(w[i].real, w[i].imag, h, &r, &im)
        out[i] = r + 1j * im
    return out.reshape(np.shape(w0))


def cauchy_sum(sources, density, weights, targets, double h, double near):
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] src = np.ascontiguousarray(sources, dtype=complex)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] tgt = np.ascontiguousarray(targets, dtype=complex)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] q = np.ascontiguousarray(
        np.asarray(density, dtype=complex) * np.asarray(weights, dtype=float))
    cdef Py_ssize_t ns = src.shape[0], nt = tgt.shape[0], i, j
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.zeros(nt, dtype=complex)
    cdef double[:] sx = np.ascontiguousarray(src.real)
    cdef double[:] sy = np.ascontiguousarray(src.imag)
    cdef double[:] qx = np.ascontiguousarray(q.real)
    cdef double[:] qy = np.ascontiguousarray(q.imag)
    cdef double tx, ty, dx, dy, r2, kr, ki, near2 = near * near, area = h * h
    cdef double accr, acci, compr, compi, yr, yi, tr, ti
    with nogil:
        for i in range(nt):
            tx = tgt[i].real
            ty = tgt[i].imag
            accr = 0.0; acci = 0.0; compr = 0.0; compi = 0.0
            for j in range(ns):
                dx = tx - sx[j]
                dy = ty - sy[j]
                r2 = dx * dx + dy * dy
                if r2 < near2:
                    _cell(-dx, -dy, h, &kr, &ki)
                    kr = kr / area
                    ki = ki / area
                else:
                    kr = dx / r2
                    ki = -dy / r2
                # Kahan summation keeps results bit-stable and accurate
                yr = (kr * qx[j] - ki * qy[j]) - compr
                tr = accr + yr
                compr = (tr - accr) - yr
                accr = tr
                yi = (kr * qy[j] + ki * qx[j]) - compi
                ti = acci + yi
                compi = (ti - acci) - yi
                acci = ti
            out[i].real = accr
            out[i].imag = acci
    return out


def cauchy_rowsum_bound(sources, density_abs, weights, targets, double h, double near):
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] src = np.ascontiguousarray(sources, dtype=complex)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] tgt = np.ascontiguousarray(targets, dtype=complex)
    cdef double[:] q = np.ascontiguousarray(
        np.asarray(density_abs, dtype=float) * np.asarray(weights, dtype=float))
    cdef Py_ssize_t ns = src.shape[0], nt = tgt.shape[0], i, j
    cdef double[:] sx = np.ascontiguousarray(src.real)
    cdef double[:] sy = np.ascontiguousarray(src.imag)
    cdef double tx, ty, dx, dy, r2, kr, ki, acc, best = 0.0
    cdef double near2 = near * near, area = h * h
    if ns == 0 or nt == 0:
        return 0.0
    with nogil:
        for i in range(nt):
            tx = tgt[i].real
            ty = tgt[i].imag
            acc = 0.0
            for j in range(ns):
                dx = tx - sx[j]
                dy = ty - sy[j]
                r2 = dx * dx + dy * dy
                if r2 < near2:
                    _cell(-dx, -dy, h, &kr, &ki)
                    acc += sqrt(kr * kr + ki * ki) / area * q[j]
                else:
                    acc += q[j] / sqrt(r2)
            if acc > best:
                best = acc
    return best
