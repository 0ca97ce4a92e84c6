# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: elliptic integrals by AGM and contour field sums."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, log, fabs, M_PI, INFINITY, NAN

cnp.import_array()

cdef inline void _agm_ke(double m1, double* k, double* e) noexcept nogil:
    cdef double a = 1.0
    cdef double b = sqrt(m1)
    cdef double acc = 0.5 * (1.0 - m1)
    cdef double pow2 = 0.5
    cdef double c, an
    cdef int it
    for it in range(40):
        if fabs(a - b) <= 1e-16 * a:
            break
        c = 0.5 * (a - b)
        an = 0.5 * (a + b)
        b = sqrt(a * b)
        a = an
        pow2 *= 2.0
        acc += pow2 * c * c
    k[0] = 0.5 * M_PI / a
    e[0] = k[0] * (1.0 - acc)


cdef inline double _ring_integral(double m, double m1) noexcept nogil:
    """((2 - m) K - 2 E) / m without cancellation: 2 K sum_{n>=1} 2^(n-1) c_n^2 / m."""
    cdef double b0 = sqrt(m1)
    cdef double c = m / (2.0 * (1.0 + b0))
    cdef double a = 0.5 * (1.0 + b0)
    cdef double b = sqrt(b0)
    cdef double pow2 = 1.0
    cdef double tail = c * c
    cdef double an
    cdef int it
    for it in range(40):
        if c <= 1e-17 * a:
            break
        an = 0.5 * (a + b)
        c = c * c / (4.0 * an)
        b = sqrt(a * b)
        a = an
        pow2 *= 2.0
        tail += pow2 * c * c
    return M_PI / a * tail / m


def ellipke_m1(m1):
    cdef cnp.ndarray[double, ndim=1] flat = np.ascontiguousarray(m1, dtype=float).ravel()
    cdef Py_ssize_t n = flat.shape[0]
    cdef cnp.ndarray[double, ndim=1] kout = np.empty(n)
    cdef cnp.ndarray[double, ndim=1] eout = np.empty(n)
    cdef Py_ssize_t i
    cdef double k, e
    with nogil:
        for i in range(n):
            if flat[i] == 0.0:
                kout[i] = INFINITY
                eout[i] = 1.0
            else:
                _agm_ke(flat[i], &k, &e)
                kout[i] = k
                eout[i] = e
    shape = np.shape(m1)
    return kout.reshape(shape), eout.reshape(shape)


def gstar_pairs(x1, x2, y1, y2):
    b = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x1, x2, y1, y2)))
    shape = b[0].shape
    cdef double[::1] a1 = np.ascontiguousarray(b[0]).ravel()
    cdef double[::1] a2 = np.ascontiguousarray(b[1]).ravel()
    cdef double[::1] b1 = np.ascontiguousarray(b[2]).ravel()
    cdef double[::1] b2 = np.ascontiguousarray(b[3]).ravel()
    cdef Py_ssize_t n = a1.shape[0]
    out = np.empty(n)
    cdef double[::1] o = out
    cdef Py_ssize_t i
    cdef double aa, dd, m, m1, k, e
    with nogil:
        for i in range(n):
            aa = (a1[i] + b1[i]) ** 2 + (a2[i] - b2[i]) ** 2
            dd = (a1[i] - b1[i]) ** 2 + (a2[i] - b2[i]) ** 2
            m1 = dd / aa
            m = 4.0 * a1[i] * b1[i] / aa
            if m1 == 0.0:
                o[i] = INFINITY
                continue
            o[i] = a1[i] * b1[i] * b1[i] / (4.0 * M_PI) * 4.0 / sqrt(aa) * _ring_integral(m, m1)
    return out.reshape(shape)


def offcontour_fields(tr, tz, const double[::1] sr, const double[::1] sz, const double[::1] sdr,
                      const double[::1] sdz, double weight, double zeta0, bint want_psi=True):
    shape = np.shape(tr)
    cdef double[::1] xr = np.ascontiguousarray(tr, dtype=float).ravel()
    cdef double[::1] xz = np.ascontiguousarray(tz, dtype=float).ravel()
    cdef Py_ssize_t nt = xr.shape[0]
    cdef Py_ssize_t ns = sr.shape[0]
    psi = np.empty(nt)
    vr = np.empty(nt)
    vz = np.empty(nt)
    cdef double[::1] op = psi
    cdef double[::1] ovr = vr
    cdef double[::1] ovz = vz
    cdef Py_ssize_t i, j
    cdef double x, y, a2, a, d2, m1, m, k, e, i0, i1, j1, dzz, sp, sv, sw, rr
    with nogil:
        for i in range(nt):
            x = xr[i]
            y = xz[i]
            sp = 0.0
            sv = 0.0
            sw = 0.0
            for j in range(ns):
                rr = sr[j]
                dzz = sz[j] - y
                a2 = (x + rr) * (x + rr) + dzz * dzz
                d2 = (x - rr) * (x - rr) + dzz * dzz
                m1 = d2 / a2
                m = 4.0 * x * rr / a2
                _agm_ke(m1, &k, &e)
                a = sqrt(a2)
                i0 = 4.0 / a * k
                i1 = 4.0 / a * (2.0 - m) / m * k - 8.0 / (a * m) * e
                if want_psi:
                    j1 = 8.0 * a * m1 / (3.0 * m) * k + 4.0 * a * (m - 2.0) / (3.0 * m) * e
                    sp += rr * (0.5 * x * ((rr * i0 - x * i1) * sdz[j] - dzz * i0 * sdr[j]) + j1 * sdz[j])
                sv += rr * rr * i1 * sdr[j]
                sw += rr * (-dzz * i0 * sdr[j] - x * i1 * sdz[j])
            op[i] = zeta0 * x / (4.0 * M_PI) * weight * sp if want_psi else NAN
            ovr[i] = -zeta0 / (4.0 * M_PI) * weight * sv
            ovz[i] = zeta0 / (4.0 * M_PI) * weight * sw
    return psi.reshape(shape), vr.reshape(shape), vz.reshape(shape)


def oncontour_fields(const double[::1] r, const double[::1] z, const double[::1] dr, const double[::1] dz,
                     const double[::1] kress, const double[::1] logsin, double zeta0):
    cdef Py_ssize_t n = r.shape[0]
    psi = np.zeros(n)
    vr = np.zeros(n)
    vz = np.zeros(n)
    cdef double[::1] op = psi
    cdef double[::1] ovr = vr
    cdef double[::1] ovz = vz
    cdef double w = 2.0 * M_PI / n
    cdef Py_ssize_t i, j, p, q, t
    cdef double a2, a, d2, m1, m, k, e, kc, ec, lg, rk
    cdef double ck[3]
    cdef double ce[3]
    cdef double qq[3]
    cdef double x, y, xp, yp, dzz, sp, dlog
    with nogil:
        for i in range(n):
            # diagonal: analytic limits of the smooth remainder
            x = r[i]
            sp = sqrt(dr[i] * dr[i] + dz[i] * dz[i])
            dlog = log(8.0 * x / sp)
            rk = kress[0]
            qq[0] = rk * (-1.0 / x) + w * (2.0 / x) * dlog
            qq[1] = rk * (-1.0 / x) + w * ((2.0 / x) * dlog - 4.0 / x)
            qq[2] = w * (-8.0 * x / 3.0)
            op[i] += x * (0.5 * x * ((x * qq[0] - x * qq[1]) * dz[i]) + qq[2] * dz[i])
            ovr[i] += x * x * qq[1] * dr[i]
            ovz[i] += x * (-x * qq[1] * dz[i])
            for j in range(i + 1, n):
                xp = r[j]
                dzz = z[j] - z[i]
                a2 = (x + xp) * (x + xp) + dzz * dzz
                d2 = (x - xp) * (x - xp) + dzz * dzz
                m1 = d2 / a2
                m = 4.0 * x * xp / a2
                _agm_ke(m1, &k, &e)
                _agm_ke(m, &kc, &ec)
                a = sqrt(a2)
                ck[0] = 4.0 / a
                ce[0] = 0.0
                ck[1] = 4.0 / a * (2.0 - m) / m
                ce[1] = -8.0 / (a * m)
                ck[2] = 8.0 * a * m1 / (3.0 * m)
                ce[2] = 4.0 * a * (m - 2.0) / (3.0 * m)
                t = (i - j + n) % n
                lg = logsin[t]
                rk = kress[t]
                for p in range(3):
                    qq[p] = -(ck[p] * kc + ce[p] * (kc - ec)) / M_PI
                    qq[p] = rk * qq[p] + w * (ck[p] * k + ce[p] * e - qq[p] * lg)
                # source j seen from target i
                op[i] += xp * (0.5 * x * ((xp * qq[0] - x * qq[1]) * dz[j] - dzz * qq[0] * dr[j]) + qq[2] * dz[j])
                ovr[i] += xp * xp * qq[1] * dr[j]
                ovz[i] += xp * (-dzz * qq[0] * dr[j] - x * qq[1] * dz[j])
                # source i seen from target j (kress and logsin rows are even)
                op[j] += x * (0.5 * xp * ((x * qq[0] - xp * qq[1]) * dz[i] + dzz * qq[0] * dr[i]) + qq[2] * dz[i])
                ovr[j] += x * x * qq[1] * dr[i]
                ovz[j] += x * (dzz * qq[0] * dr[i] - xp * qq[1] * dz[i])
        for i in range(n):
            op[i] *= zeta0 * r[i] / (4.0 * M_PI)
            ovr[i] *= -zeta0 / (4.0 * M_PI)
            ovz[i] *= zeta0 / (4.0 * M_PI)
    return psi, vr, vz
