"""Pure-numpy implementations of the hot kernels.

Mirrors the compiled module ``_core`` function for function; the backend
selector in ``_backend`` picks one of the two at import time.
"""

from __future__ import annotations

import numpy as np

_FOUR_PI = 4.0 * np.pi


def ellipke_m1(m1):
    """Complete elliptic integrals K(m), E(m) addressed by m1 = 1 - m.

    Arithmetic-geometric mean, started from b = sqrt(m1) so that the
    logarithmic blow-up near m = 1 keeps full relative accuracy.
    """
    m1 = np.asarray(m1, dtype=float)
    a = np.ones_like(m1)
    b = np.sqrt(m1)
    c2 = 1.0 - m1
    acc = 0.5 * c2
    pow2 = 0.5
    for _ in range(40):
        if not np.any(np.abs(a - b) > 1e-16 * a):
            break
        c = 0.5 * (a - b)
        a, b = 0.5 * (a + b), np.sqrt(a * b)
        pow2 *= 2.0
        acc = acc + pow2 * c * c
    with np.errstate(divide="ignore"):
        k = 0.5 * np.pi / a
    return k, k * (1.0 - acc)


def ring_integral(m, m1):
    """((2 - m) K(m) - 2 E(m)) / m, free of the cancellation at small m.

    Equal to 2 K sum_{n>=1} 2^(n-1) c_n^2 / m over the AGM sequence, with
    c_{n+1} = c_n^2 / (4 a_{n+1}) so no difference of close numbers is taken.
    """
    m = np.asarray(m, dtype=float)
    b0 = np.sqrt(np.asarray(m1, dtype=float))
    c = m / (2.0 * (1.0 + b0))
    a = 0.5 * (1.0 + b0)
    b = np.sqrt(b0)
    tail = c * c
    pow2 = 1.0
    for _ in range(40):
        if not np.any(c > 1e-17 * a):
            break
        an = 0.5 * (a + b)
        c = c * c / (4.0 * an)
        b = np.sqrt(a * b)
        a = an
        pow2 *= 2.0
        tail = tail + pow2 * c * c
    return np.pi / a * tail / m


def _pair_geometry(x1, x2, y1, y2):
    a2 = (x1 + y1) ** 2 + (x2 - y2) ** 2
    d2 = (x1 - y1) ** 2 + (x2 - y2) ** 2
    return a2, d2


def gstar_pairs(x1, x2, y1, y2):
    """Closed-form Stokes Green's function for broadcast point arrays."""
    x1, x2, y1, y2 = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x1, x2, y1, y2)))
    a2, d2 = _pair_geometry(x1, x2, y1, y2)
    m1 = d2 / a2
    m = 4.0 * x1 * y1 / a2
    i1 = 4.0 / np.sqrt(a2) * ring_integral(m, m1)
    return x1 * y1 * y1 / _FOUR_PI * i1


def _kernel_triplet(a, m, m1, k, e):
    """Coefficient form of the three azimuthal integrals.

    Each integral is cK*K(m) + cE*E(m); returns the (cK, cE) pairs for
    int dphi/R, int cos(phi)/R dphi and int R cos(phi) dphi.
    """
    return (
        (4.0 / a, 0.0),
        (4.0 / a * (2.0 - m) / m, -8.0 / (a * m)),
        (8.0 * a * m1 / (3.0 * m), 4.0 * a * (m - 2.0) / (3.0 * m)),
    )


def offcontour_fields(tr, tz, sr, sz, sdr, sdz, weight, zeta0, want_psi=True):
    """Stream function and velocity at targets by the periodic trapezoid rule.

    Sources are contour samples (sr, sz) with parameter derivatives
    (sdr, sdz) on a uniform periodic grid of spacing ``weight``. Targets
    must not lie on the contour.
    """
    tr = np.asarray(tr, dtype=float)
    tz = np.asarray(tz, dtype=float)
    psi = np.empty(tr.shape)
    vr = np.empty(tr.shape)
    vz = np.empty(tr.shape)
    chunk = max(1, 2_000_000 // max(1, sr.size))
    flat_r, flat_z = tr.ravel(), tz.ravel()
    out_p, out_r, out_z = psi.ravel(), vr.ravel(), vz.ravel()
    for start in range(0, flat_r.size, chunk):
        x = flat_r[start:start + chunk, None]
        y = flat_z[start:start + chunk, None]
        a2, d2 = _pair_geometry(x, y, sr[None, :], sz[None, :])
        a = np.sqrt(a2)
        m1 = d2 / a2
        m = 4.0 * x * sr[None, :] / a2
        k, e = ellipke_m1(m1)
        (c0k, _), (c1k, c1e), (cjk, cje) = _kernel_triplet(a, m, m1, k, e)
        i0 = c0k * k
        i1 = c1k * k + c1e * e
        dz_ = sz[None, :] - y
        if want_psi:
            j1 = cjk * k + cje * e
            integrand = sr * (0.5 * x * ((sr * i0 - x * i1) * sdz - dz_ * i0 * sdr) + j1 * sdz)
            out_p[start:start + chunk] = zeta0 * flat_r[start:start + chunk] / _FOUR_PI * weight * integrand.sum(axis=1)
        out_r[start:start + chunk] = -zeta0 / _FOUR_PI * weight * (sr * sr * i1 * sdr).sum(axis=1)
        out_z[start:start + chunk] = zeta0 / _FOUR_PI * weight * (sr * (-dz_ * i0 * sdr - x * i1 * sdz)).sum(axis=1)
    if not want_psi:
        psi[...] = np.nan
    return psi, vr, vz


def oncontour_fields(r, z, dr, dz, kress, logsin, zeta0):
    """Stream function and velocity at the contour nodes themselves.

    ``kress`` holds the circulant product-integration weights for the
    periodic log factor and ``logsin`` the values ln(4 sin^2(du/2)), both as
    rows indexed by (i - j) mod N. The log-singular part of every kernel is
    split off analytically through the complementary integrals K(m1), E(m1).
    """
    n = r.size
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    rk = kress[idx]
    lg = logsin[idx]
    eye = idx == 0
    w = 2.0 * np.pi / n
    x = r[:, None]
    y = z[:, None]
    a2, d2 = _pair_geometry(x, y, r[None, :], z[None, :])
    a = np.sqrt(a2)
    m1 = np.where(eye, 0.5, d2 / a2)
    m = np.where(eye, 0.5, 4.0 * x * r[None, :] / a2)
    k, e = ellipke_m1(m1)
    kc, ec = ellipke_m1(m)
    speed = np.sqrt(dr * dr + dz * dz)
    diag_log = np.log(8.0 * r / speed)[:, None]
    pieces = []
    coeffs = _kernel_triplet(a, m, m1, k, e)
    diag_m = ((2.0 / x) * diag_log, (2.0 / x) * diag_log - 4.0 / x, -8.0 * x / 3.0)
    diag_l = (-1.0 / x, -1.0 / x, 0.0 * x)
    for (ck, ce), dm, dl in zip(coeffs, diag_m, diag_l):
        total = ck * k + ce * e
        lcoef = -(ck * kc + ce * (kc - ec)) / np.pi
        smooth = total - lcoef * lg
        lcoef = np.where(eye, dl, lcoef)
        smooth = np.where(eye, dm, smooth)
        pieces.append(rk * lcoef + w * smooth)
    q0, q1, qj = pieces
    dz_ = z[None, :] - y
    sr = r[None, :]
    psi = zeta0 * r / _FOUR_PI * np.sum(sr * (0.5 * x * ((sr * q0 - x * q1) * dz[None, :] - dz_ * q0 * dr[None, :]) + qj * dz[None, :]), axis=1)
    vr = -zeta0 / _FOUR_PI * np.sum(sr * sr * q1 * dr[None, :], axis=1)
    vz = zeta0 / _FOUR_PI * np.sum(sr * (-dz_ * q0 * dr[None, :] - x * q1 * dz[None, :]), axis=1)
    return psi, vr, vz
