"""Green's function of the Stokes stream operator and patch-induced fields.

The operator is -(1/x1) div((1/x1) grad) on the half-plane x1 > 0. Its
Green's function G* is evaluated in closed form through complete elliptic
integrals (AGM), and split as G* = z1^2 G + H around a reference radius z1,
where G is the Dirichlet Green's function of -Delta on the half-plane.

Fields of a uniform patch (density 1/eps^2 on a region A) are evaluated as
contour integrals over the boundary of A. On the boundary itself the
logarithmic singularity is integrated by a spectrally accurate product rule;
close to it, fields are reconstructed along a line from one-sided boundary
data; far from it, the periodic trapezoid rule is refined until the nearest
complex singularity is resolved.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _backend
from .contour import Contour, kress_row, logsin_row, spectral_derivative, trig_eval
from .errors import DomainError, SingularityError

FOUR_PI = 4.0 * np.pi
LN8 = np.log(8.0)

# trapezoid refinement: exp(-RESOLVE * distance / speed) stays below roundoff
RESOLVE = 45.0
# inside this fraction of the local parameter speed, use the one-sided expansion
NEAR_FRACTION = 0.01
MAX_NODES = 1 << 15


@dataclass(frozen=True)
class HalfPlanePoint:
    r: float
    z: float

    def __iter__(self):
        yield self.r
        yield self.z


def _xy(p) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(p, HalfPlanePoint):
        return np.asarray(p.r, dtype=float), np.asarray(p.z, dtype=float)
    arr = np.asarray(p, dtype=float)
    if arr.shape == (2,):
        return arr[0], arr[1]
    return arr[..., 0], arr[..., 1]


def _check_radius(*radii) -> None:
    for r in radii:
        if np.any(~(np.asarray(r) > 0.0)):
            raise DomainError("kernel arguments need strictly positive radius")


def _scalar(v):
    v = np.asarray(v)
    return float(v) if v.ndim == 0 else v


def rho(x, xp):
    """Scaled squared distance ((x1-x1')^2 + (x2-x2')^2) / (x1 x1')."""
    x1, x2 = _xy(x)
    y1, y2 = _xy(xp)
    _check_radius(x1, y1)
    return _scalar(((x1 - y1) ** 2 + (x2 - y2) ** 2) / (x1 * y1))


def gstar(x, xp):
    """G*(x, x') by the AGM closed form; accepts points or (..., 2) arrays."""
    x1, x2 = _xy(x)
    y1, y2 = _xy(xp)
    _check_radius(x1, y1)
    if np.any((x1 == y1) & (x2 == y2)):
        raise SingularityError("G* is singular at coincident points")
    return _scalar(_backend.gstar_pairs(x1, x2, y1, y2))


def gstar_quadrature(x, xp, rtol: float = 1e-13) -> float:
    """G*(x, x') by adaptive quadrature of its angular integral (slow reference)."""
    from scipy.integrate import quad

    x1, x2 = (float(v) for v in _xy(x))
    y1, y2 = (float(v) for v in _xy(xp))
    _check_radius(x1, y1)
    if x1 == y1 and x2 == y2:
        raise SingularityError("G* is singular at coincident points")
    a = (x1 - y1) ** 2 + (x2 - y2) ** 2
    b = 4.0 * x1 * y1

    # folding t -> pi - t onto [0, pi/2] removes the cancellation of cos t
    def folded(t):
        s1 = np.sqrt(a + b * np.sin(0.5 * t) ** 2)
        s2 = np.sqrt(a + b * np.cos(0.5 * t) ** 2)
        return b * np.cos(t) ** 2 / (s1 * s2 * (s1 + s2))

    knee = min(0.5 * np.pi, 8.0 * np.sqrt(a / (x1 * y1)))
    val, _ = quad(folded, 0.0, 0.5 * np.pi, epsabs=0.0, epsrel=rtol, limit=400, points=[knee])
    return 2.0 * x1 * y1 * y1 * val / FOUR_PI


def g_halfplane(x, xp):
    """Dirichlet Green's function of -Delta on the right half-plane."""
    x1, x2 = _xy(x)
    y1, y2 = _xy(xp)
    d2 = (x1 - y1) ** 2 + (x2 - y2) ** 2
    if np.any(d2 == 0.0):
        raise SingularityError("G is singular at coincident points")
    if np.any(np.asarray(x1) < 0.0) or np.any(np.asarray(y1) < 0.0):
        raise DomainError("G is defined on the closed right half-plane")
    return _scalar(np.log(((x1 + y1) ** 2 + (x2 - y2) ** 2) / d2) / FOUR_PI)


def h_regular(x, xp, z1: float):
    """Regular part H = G* - z1^2 G.

    At coincident points the split is finite only on the line x1 = z1, where
    the continuous extension (z1^2/pi)(ln 2 - 1) is returned.
    """
    x1, x2 = _xy(x)
    y1, y2 = _xy(xp)
    _check_radius(x1, y1, z1)
    same = (x1 == y1) & (x2 == y2)
    if not np.any(same):
        return _scalar(_backend.gstar_pairs(x1, x2, y1, y2) - z1 * z1 * np.log(
            ((x1 + y1) ** 2 + (x2 - y2) ** 2) / ((x1 - y1) ** 2 + (x2 - y2) ** 2)) / FOUR_PI)
    if np.any(same & (x1 != z1)):
        raise SingularityError("H is log-singular on the diagonal unless x1 = z1")
    x1b, x2b, y1b, y2b = np.broadcast_arrays(x1, x2, y1, y2)
    out = np.full(x1b.shape, z1 * z1 / np.pi * (np.log(2.0) - 1.0))
    off = ~np.broadcast_to(same, x1b.shape)
    if np.any(off):
        out[off] = h_regular(np.stack([x1b[off], x2b[off]], -1), np.stack([y1b[off], y2b[off]], -1), z1)
    return _scalar(out)


def gstar_near_field(x, xp):
    """Leading small-rho expansion of G*: prefactor times (ln(1/rho) + 2 ln 8 - 4)."""
    x1, _ = _xy(x)
    y1, _ = _xy(xp)
    rr = rho(x, xp)
    return _scalar(np.sqrt(x1) * y1**1.5 / FOUR_PI * (np.log(1.0 / rr) + 2.0 * LN8 - 4.0))


def gstar_far_field(x, xp):
    """Leading large-rho term of G*: x1^(1/2) x1'^(3/2) rho^(-3/2) / 4."""
    x1, _ = _xy(x)
    y1, _ = _xy(xp)
    rr = rho(x, xp)
    return _scalar(np.sqrt(x1) * y1**1.5 / (4.0 * rr**1.5))


# ---------------------------------------------------------------------------
# patch fields


class FieldValues(NamedTuple):
    value: np.ndarray
    d_r: np.ndarray
    d_z: np.ndarray


def _planar_log_boundary(c: Contour):
    """P(x) = int_A ln|x - x'| dx' and its gradient at the contour nodes."""
    n = c.n
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    rk = kress_row(n)[idx]
    lg = logsin_row(n)[idx]
    eye = idx == 0
    w = c.weight
    dxr = c.r[None, :] - c.r[:, None]
    dxz = c.z[None, :] - c.z[:, None]
    d2 = dxr * dxr + dxz * dxz
    with np.errstate(divide="ignore", invalid="ignore"):
        smooth_log = 0.5 * np.log(d2) - 0.5 * lg
    speed = c.speed()
    smooth_log[eye] = np.log(speed)
    cross = dxr * c.dz[None, :] - dxz * c.dr[None, :]
    value = np.sum(rk * 0.25 * cross + w * 0.5 * cross * (smooth_log - 0.5), axis=1)
    qr = rk * 0.5 + w * smooth_log
    grad_r = -np.sum(qr * c.dz[None, :], axis=1)
    grad_z = np.sum(qr * c.dr[None, :], axis=1)
    return value, grad_r, grad_z


def _planar_log_direct(c: Contour, pr, pz):
    """P and grad P at points off the contour by the trapezoid rule."""
    pr = np.asarray(pr, dtype=float)[..., None]
    pz = np.asarray(pz, dtype=float)[..., None]
    dxr = c.r - pr
    dxz = c.z - pz
    lnd = 0.5 * np.log(dxr * dxr + dxz * dxz)
    w = c.weight
    value = 0.5 * w * np.sum((dxr * c.dz - dxz * c.dr) * (lnd - 0.5), axis=-1)
    grad_r = -w * np.sum(lnd * c.dz, axis=-1)
    grad_z = w * np.sum(lnd * c.dr, axis=-1)
    return value, grad_r, grad_z


class _StokesModel:
    """psi = eps^-2 int_A G*(x, x') dx' for the uniform patch A."""

    def __init__(self, eps: float):
        self.zeta0 = 1.0 / (eps * eps)

    def boundary(self, c: Contour) -> FieldValues:
        n = c.n
        psi, vr, vz = _backend.oncontour_fields(c.r, c.z, c.dr, c.dz, kress_row(n), logsin_row(n), self.zeta0)
        return FieldValues(psi, c.r * vz, -c.r * vr)

    def direct(self, c: Contour, tr, tz) -> FieldValues:
        tr = np.asarray(tr, dtype=float)
        psi, vr, vz = _backend.offcontour_fields(tr, np.asarray(tz, dtype=float), c.r, c.z, c.dr, c.dz, c.weight, self.zeta0)
        return FieldValues(psi, tr * vz, -tr * vr)

    def hessian_trace(self, r, d_r, inside):
        return d_r / r - (r * r * self.zeta0 if inside else 0.0)


class _PlanarModel:
    """psi1 = (z1^2/eps^2) int_A G(x, x') dx' with the half-plane Green's function."""

    def __init__(self, eps: float, z1: float):
        self.zeta0 = 1.0 / (eps * eps)
        self.coef = z1 * z1 * self.zeta0 / (2.0 * np.pi)

    def _combine(self, own, image):
        value = self.coef * (image[0] - own[0])
        d_r = self.coef * (-image[1] - own[1])
        d_z = self.coef * (image[2] - own[2])
        return FieldValues(value, d_r, d_z)

    def boundary(self, c: Contour) -> FieldValues:
        return self._combine(_planar_log_boundary(c), _planar_log_direct(c, -c.r, c.z))

    def direct(self, c: Contour, tr, tz) -> FieldValues:
        tr = np.asarray(tr, dtype=float)
        tz = np.asarray(tz, dtype=float)
        return self._combine(_planar_log_direct(c, tr, tz), _planar_log_direct(c, -tr, tz))

    def hessian_trace(self, r, d_r, inside):
        return -(2.0 * np.pi * self.coef) if inside else 0.0 * r


class PatchField:
    """Field of a uniform patch bounded by ``contour``, cached per contour.

    ``model`` is ``"stokes"`` for the full stream function or ``"planar"``
    for the singular part of the split about radius ``z1``.
    """

    def __init__(self, contour: Contour, eps: float, model: str = "stokes", z1: float | None = None):
        if np.any(contour.r <= 0.0):
            raise DomainError("patch must lie in the open half-plane")
        self.contour = contour
        self.eps = eps
        if model == "stokes":
            self.model = _StokesModel(eps)
        elif model == "planar":
            if z1 is None:
                raise ValueError("planar model needs the split radius z1")
            self.model = _PlanarModel(eps, z1)
        else:
            raise ValueError(f"unknown field model {model!r}")
        self._boundary: FieldValues | None = None
        self._tangent_grad = None
        self._fine = {}
        self.speed_max = float(np.max(contour.speed()))
        self.near = NEAR_FRACTION * self.speed_max

    # boundary data -------------------------------------------------------
    @property
    def boundary(self) -> FieldValues:
        if self._boundary is None:
            self._boundary = self.model.boundary(self.contour)
        return self._boundary

    def _tangent_derivs(self):
        if self._tangent_grad is None:
            b = self.boundary
            self._tangent_grad = (spectral_derivative(b.d_r), spectral_derivative(b.d_z))
        return self._tangent_grad

    def boundary_hessian(self, inside: bool, u=None):
        """One-sided Hessian (h_rr, h_rz, h_zz) on the contour.

        Tangential derivatives of the gradient fix two rows; the operator
        fixes the trace on each side.
        """
        c = self.contour
        b = self.boundary
        gr_u, gz_u = self._tangent_derivs()
        if u is None:
            p, q, r, d_r = c.dr, c.dz, c.r, b.d_r
        else:
            p = trig_eval(c.r, u, 1)
            q = trig_eval(c.z, u, 1)
            r = trig_eval(c.r, u)
            d_r = trig_eval(b.d_r, u)
            gr_u = trig_eval(b.d_r, u, 1)
            gz_u = trig_eval(b.d_z, u, 1)
        trace = self.model.hessian_trace(r, d_r, inside)
        # unknowns (a, b, c): p a + q b = gr_u ; p b + q c = gz_u ; a + c = trace
        det = p * p + q * q
        hrz = (q * gr_u + p * gz_u - p * q * trace) / det
        hrr = (p * gr_u - q * gz_u + q * q * trace) / det
        hzz = trace - hrr
        return hrr, hrz, hzz

    # off-contour evaluation ----------------------------------------------
    def _fine_contour(self, m: int) -> Contour:
        if m not in self._fine:
            self._fine[m] = self.contour.upsample(m)
        return self._fine[m]

    def _distance(self, tr, tz):
        fine = self._fine_contour(max(4 * self.contour.n, 1024))
        d2 = (tr[:, None] - fine.r[None, :]) ** 2 + (tz[:, None] - fine.z[None, :]) ** 2
        j = np.argmin(d2, axis=1)
        return np.sqrt(d2[np.arange(tr.size), j]), j * (2.0 * np.pi / fine.n)

    def direct(self, tr, tz) -> FieldValues:
        """Trapezoid evaluation with refinement chosen from target distance."""
        tr = np.atleast_1d(np.asarray(tr, dtype=float))
        tz = np.atleast_1d(np.asarray(tz, dtype=float))
        dist, _ = self._distance(tr, tz)
        return self._direct_with_distance(tr, tz, dist)

    def _direct_with_distance(self, tr, tz, dist):
        out = [np.empty(tr.shape) for _ in range(3)]
        n0 = self.contour.n
        need = RESOLVE * self.speed_max / np.maximum(dist, 1e-300)
        levels = np.maximum(0, np.ceil(np.log2(np.maximum(need / n0, 1.0)))).astype(int)
        for lev in np.unique(levels):
            m = n0 << int(lev)
            if m > MAX_NODES:
                m = MAX_NODES
            sel = levels == lev
            vals = self.model.direct(self._fine_contour(m), tr[sel], tz[sel])
            for k in range(3):
                out[k][sel] = vals[k]
        return FieldValues(*out)

    def _foot_point(self, tr, tz, u0):
        c = self.contour
        u = np.array(u0, dtype=float)
        for _ in range(30):
            xr = trig_eval(c.r, u) - tr
            xz = trig_eval(c.z, u) - tz
            r1, z1 = trig_eval(c.r, u, 1), trig_eval(c.z, u, 1)
            r2, z2 = trig_eval(c.r, u, 2), trig_eval(c.z, u, 2)
            f = xr * r1 + xz * z1
            df = r1 * r1 + z1 * z1 + xr * r2 + xz * z2
            step = f / df
            u = u - step
            if np.all(np.abs(step) < 1e-15):
                break
        return np.mod(u, 2.0 * np.pi)

    def along_line(self, u, direction, t, inside: bool) -> FieldValues:
        """Field at base(u) + t*direction for 0 <= t <= near zone.

        Quartic Hermite in t for the value (value, slope and one-sided
        curvature at the base; value and slope at an anchor) and a quartic
        for the gradient (gradient and one-sided Hessian at the base, three
        anchors).
        """
        c = self.contour
        b = self.boundary
        u = np.atleast_1d(np.asarray(u, dtype=float))
        er, ez = (np.broadcast_to(np.asarray(v, dtype=float), u.shape) for v in direction)
        t = np.broadcast_to(np.asarray(t, dtype=float), u.shape)
        base_r, base_z = trig_eval(c.r, u), trig_eval(c.z, u)
        f0 = trig_eval(b.value, u)
        g0r, g0z = trig_eval(b.d_r, u), trig_eval(b.d_z, u)
        hrr, hrz, hzz = self.boundary_hessian(inside, u)
        s1 = g0r * er + g0z * ez
        s2 = er * er * hrr + 2 * er * ez * hrz + ez * ez * hzz
        dg_r = hrr * er + hrz * ez
        dg_z = hrz * er + hzz * ez
        d = self.near
        fr = np.array([1.0, 1.0 / 3.0, 2.0 / 3.0])
        anch_r = np.concatenate([base_r + f * d * er for f in fr])
        anch_z = np.concatenate([base_z + f * d * ez for f in fr])
        av = self._direct_with_distance(anch_r, anch_z, np.full(anch_r.shape, 0.3 * d))
        k = u.size
        fd, gdr, gdz = av.value[:k], av.d_r[:k], av.d_z[:k]
        sd = gdr * er + gdz * ez
        # value: f = f0 + s1 t + s2 t^2/2 + c3 t^3 + c4 t^4
        rhs1 = fd - (f0 + s1 * d + 0.5 * s2 * d * d)
        rhs2 = sd - (s1 + s2 * d)
        c4 = (rhs2 * d - 3.0 * rhs1) / d**4
        c3 = (rhs1 - c4 * d**4) / d**3
        value = f0 + s1 * t + 0.5 * s2 * t * t + c3 * t**3 + c4 * t**4
        # gradient: g0 + dg t + a t^2 + b t^3 + c t^4 through the three anchors
        tt = fr * d
        vand = np.stack([tt**2, tt**3, tt**4], axis=1)
        inv = np.linalg.inv(vand)
        grads = []
        for g0, dg, ga in ((g0r, dg_r, av.d_r), (g0z, dg_z, av.d_z)):
            rhs = ga.reshape(3, k) - g0[None, :] - dg[None, :] * tt[:, None]
            coef = inv @ rhs
            grads.append(g0 + dg * t + coef[0] * t**2 + coef[1] * t**3 + coef[2] * t**4)
        return FieldValues(value, grads[0], grads[1])

    def evaluate(self, tr, tz) -> FieldValues:
        """Field and gradient at arbitrary targets in the half-plane."""
        tr_a = np.asarray(tr, dtype=float)
        shape = np.broadcast(tr_a, np.asarray(tz)).shape
        tr1 = np.broadcast_to(tr_a, shape).ravel().copy()
        tz1 = np.broadcast_to(np.asarray(tz, dtype=float), shape).ravel().copy()
        if np.any(tr1 < 0.0):
            raise DomainError("targets must satisfy r >= 0")
        out = [np.zeros(tr1.shape) for _ in range(3)]
        on_axis = tr1 == 0.0
        live = ~on_axis
        dist, uguess = self._distance(tr1, tz1)
        near = live & (dist < self.near)
        far = live & ~near
        if np.any(far):
            vals = self._direct_with_distance(tr1[far], tz1[far], dist[far])
            for k in range(3):
                out[k][far] = vals[k]
        if np.any(near):
            c = self.contour
            u = self._foot_point(tr1[near], tz1[near], uguess[near])
            br, bz = trig_eval(c.r, u), trig_eval(c.z, u)
            pr, pz = trig_eval(c.r, u, 1), trig_eval(c.z, u, 1)
            sp = np.hypot(pr, pz)
            nr, nz = pz / sp, -pr / sp
            signed = (tr1[near] - br) * nr + (tz1[near] - bz) * nz
            inside = signed < 0.0
            t = np.abs(signed)
            for side in (True, False):
                sel = inside == side
                if not np.any(sel):
                    continue
                sgn = -1.0 if side else 1.0
                vals = self.along_line(u[sel], (sgn * nr[sel], sgn * nz[sel]), t[sel], side)
                idx = np.flatnonzero(near)[sel]
                for k in range(3):
                    out[k][idx] = vals[k]
        if np.any(on_axis):
            # psi vanishes on the axis; the gradient follows from the r^2 law
            out[0][on_axis] = 0.0
        return FieldValues(*(o.reshape(shape) for o in out))

    def inside(self, tr, tz) -> np.ndarray:
        """Winding-number membership test for targets not on the contour."""
        fine = self._fine_contour(max(4 * self.contour.n, 1024))
        tr = np.atleast_1d(np.asarray(tr, dtype=float))
        tz = np.atleast_1d(np.asarray(tz, dtype=float))
        ang = np.arctan2(fine.z[None, :] - tz[:, None], fine.r[None, :] - tr[:, None])
        turn = np.diff(np.concatenate([ang, ang[:, :1]], axis=1), axis=1)
        turn = (turn + np.pi) % (2.0 * np.pi) - np.pi
        return np.abs(turn.sum(axis=1)) > np.pi


def _field_of(patch, eps: float | None = None) -> PatchField:
    if isinstance(patch, PatchField):
        return patch
    contour = patch.contour() if callable(getattr(patch, "contour", None)) else patch.contour
    return PatchField(contour, eps if eps is not None else patch.eps)


def stream_from_patch(patch, x) -> float | np.ndarray:
    """psi(x) = eps^-2 int_A G*(x, x') dx' for a patch state or field."""
    x1, x2 = _xy(x)
    if np.any(np.asarray(x1) < 0.0):
        raise DomainError("stream function is defined for r >= 0")
    vals = _field_of(patch).evaluate(x1, x2)
    return _scalar(vals.value)


def velocity_from_patch(patch, x, frame_speed: float = 0.0):
    """Meridional velocity (v_r, v_z) = (1/r)(-dPsi/dz, dPsi/dr), Psi = psi - frame_speed r^2/2."""
    x1, x2 = _xy(x)
    _check_radius(x1)
    vals = _field_of(patch).evaluate(x1, x2)
    vr = -vals.d_z / x1
    vz = vals.d_r / x1 - frame_speed
    return _scalar(vr), _scalar(vz)
