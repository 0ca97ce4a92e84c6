"""Approximate thin-core ring: Rankine core, mirror image and regular correction.

The core is a disc B_s(z), z = (z1, 0). Its planar potential V (a Rankine
vortex normalised to take the value a/(2 pi) ln(1/eps) on the rim) and the
mirror copy about the axis give the singular part; the regular part of the
Stokes kernel integrated over the disc gives the correction H_core.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .contour import Contour
from .errors import DomainError, GeometryError, SolverError
from .kernel import PatchField, _xy, h_regular

MAX_EPS = 0.3
DISC_NODES = 128


@dataclass(frozen=True)
class RingParameters:
    kappa: float
    W: float
    eps: float

    def __post_init__(self):
        if not (self.kappa > 0.0 and np.isfinite(self.kappa)):
            raise DomainError(f"circulation must be positive, got {self.kappa}")
        if not (self.W > 0.0 and np.isfinite(self.W)):
            raise DomainError(f"speed coefficient must be positive, got {self.W}")
        if not 0.0 < self.eps < 1.0:
            raise DomainError(f"eps must lie in (0, 1), got {self.eps}")

    @property
    def log_eps(self) -> float:
        """ln(1/eps)."""
        return float(-np.log(self.eps))

    @property
    def frame_speed(self) -> float:
        return self.W * self.log_eps

    @property
    def r_star(self) -> float:
        return self.kappa / (4.0 * np.pi * self.W)


@dataclass(frozen=True)
class CoreAnsatz:
    z1: float
    s: float
    a: float
    mu: float
    n_grad: float


def flux_constant(params: RingParameters, z1: float) -> float:
    """mu = (z1/2pi) kappa ln(1/eps) - (W/2) z1^2 ln(1/eps)."""
    lg = params.log_eps
    return z1 * params.kappa * lg / (2.0 * np.pi) - 0.5 * params.W * z1 * z1 * lg


def rim_value(core: CoreAnsatz, params: RingParameters) -> float:
    return core.a * params.log_eps / (2.0 * np.pi)


def _rankine(d, core: CoreAnsatz, params: RingParameters):
    rim = rim_value(core, params)
    d = np.asarray(d, dtype=float)
    inner = rim + core.z1**2 / (4.0 * params.eps**2) * (core.s**2 - d * d)
    with np.errstate(divide="ignore"):
        outer = rim * np.log(d) / np.log(core.s)
    return np.where(d <= core.s, inner, outer)


def rankine_V(x, core: CoreAnsatz, params: RingParameters):
    """Rankine profile about z = (z1, 0)."""
    r, z = _xy(x)
    out = _rankine(np.hypot(r - core.z1, z), core, params)
    return float(out) if out.ndim == 0 else out


def mirror_V(x, core: CoreAnsatz, params: RingParameters):
    """Rankine profile about the reflected centre (-z1, 0), by its radial formula."""
    r, z = _xy(x)
    out = _rankine(np.hypot(r + core.z1, z), core, params)
    return float(out) if out.ndim == 0 else out


def singular_part(x, core: CoreAnsatz, params: RingParameters):
    """V about z minus V about the mirror centre."""
    return rankine_V(x, core, params) - mirror_V(x, core, params)


@lru_cache(maxsize=64)
def _disc_field(z1: float, s: float, eps: float) -> PatchField:
    th = 2.0 * np.pi * np.arange(DISC_NODES) / DISC_NODES
    return PatchField(Contour.from_polar(z1, 0.0, th, np.full(DISC_NODES, s)), eps)


def disc_planar_potential(x, z1: float, s: float, eps: float):
    """(z1^2/eps^2) int_{B_s(z)} G(x, x') dx' in closed form."""
    r, z = _xy(x)

    def log_area(d):
        inside = 0.5 * np.pi * (d * d - s * s) + np.pi * s * s * np.log(s)
        with np.errstate(divide="ignore"):
            outside = np.pi * s * s * np.log(d)
        return np.where(d < s, inside, outside)

    coef = z1 * z1 / (2.0 * np.pi * eps * eps)
    out = coef * (log_area(np.hypot(r + z1, z)) - log_area(np.hypot(r - z1, z)))
    return float(out) if np.ndim(out) == 0 else out


def disc_planar_gradient(x, z1: float, s: float, eps: float):
    """Gradient (d_r, d_z) of disc_planar_potential."""
    r, z = _xy(x)

    def radial(dr, dz):
        d = np.hypot(dr, dz)
        with np.errstate(divide="ignore", invalid="ignore"):
            f = np.where(d < s, np.pi, np.pi * s * s / (d * d))
        return f * dr, f * dz

    coef = z1 * z1 / (2.0 * np.pi * eps * eps)
    ir, iz = radial(r + z1, z)
    orr, oz = radial(r - z1, z)
    gr = coef * (ir - orr)
    gz = coef * (iz - oz)
    if np.ndim(gr) == 0:
        return float(gr), float(gz)
    return gr, gz


def regular_correction_gradient(x, z1: float, s: float, eps: float):
    """Gradient of the contour-route regular correction."""
    r, z = _xy(x)
    vals = _disc_field(float(z1), float(s), float(eps)).evaluate(r, z)
    pr, pz = disc_planar_gradient(np.stack(np.broadcast_arrays(r, z), -1), z1, s, eps)
    gr, gz = vals.d_r - pr, vals.d_z - pz
    if np.ndim(gr) == 0:
        return float(gr), float(gz)
    return gr, gz


def regular_correction(x, z1: float, s: float, eps: float, method: str = "contour", nodes: int = 32):
    """eps^-2 int_{B_s(z)} H(x, x') dx'.

    ``contour`` subtracts the closed-form planar potential of the disc from
    the exact Stokes stream of the disc; ``gauss`` applies a polar
    Gauss-Legendre rule with ``nodes``^2 points to H directly; ``centered``
    is the one-point value pi s^2 H(x, z)/eps^2.
    """
    r, z = _xy(x)
    if method == "contour":
        f = _disc_field(float(z1), float(s), float(eps))
        psi = f.evaluate(r, z).value
        out = psi - disc_planar_potential(np.stack(np.broadcast_arrays(r, z), -1), z1, s, eps)
    elif method == "gauss":
        xg, wg = np.polynomial.legendre.leggauss(nodes)
        rad = 0.5 * s * (xg + 1.0)
        wr = 0.5 * s * wg
        ang = np.pi * (xg + 1.0)
        wa = np.pi * wg
        pr = (z1 + np.outer(rad, np.cos(ang))).ravel()
        pz = np.outer(rad, np.sin(ang)).ravel()
        w = (np.outer(wr * rad, wa)).ravel()
        rr = np.atleast_1d(r).ravel()
        zz = np.atleast_1d(z).ravel()
        vals = np.empty(rr.size)
        for i in range(rr.size):
            vals[i] = np.dot(w, h_regular(np.stack([np.full(pr.size, rr[i]), np.full(pr.size, zz[i])], -1),
                                          np.stack([pr, pz], -1), z1))
        out = vals.reshape(np.shape(r)) / eps**2
    elif method == "centered":
        out = np.pi * s * s / eps**2 * np.asarray(h_regular(np.stack(np.broadcast_arrays(r, z), -1), (z1, 0.0), z1))
    else:
        raise ValueError(f"unknown method {method!r}")
    return float(out) if np.ndim(out) == 0 else out


def _core_radius(a: float, z1: float, params: RingParameters) -> float:
    # s^2 ln(1/s) = a ln(1/eps) eps^2 / (pi z1^2) on the branch s < e^-1/2
    target = a * params.log_eps * params.eps**2 / (np.pi * z1 * z1)
    top = np.exp(-0.5)
    if target <= 0.0 or target >= top * top * 0.5:
        raise GeometryError(f"no thin core radius for a={a:.6g}, z1={z1:.6g}")
    return float(brentq(lambda s: s * s * -np.log(s) - target, 1e-12, top, xtol=1e-300, rtol=1e-15, maxiter=500))


def solve_core_parameters(params: RingParameters, z1: float, tol: float = 1e-10, max_iter: int = 100) -> CoreAnsatz:
    """Jointly solve the gradient match and the rim-value equation for (a, s)."""
    if params.eps >= MAX_EPS:
        raise DomainError(f"eps={params.eps} is outside the thin-core regime (< {MAX_EPS})")
    if not z1 > 0.0:
        raise DomainError("ring radius must be positive")
    lg = params.log_eps
    mu = flux_constant(params, z1)
    rhs0 = z1 * params.kappa * lg / (2.0 * np.pi)
    a = params.kappa * z1
    s = np.sqrt(params.kappa / (np.pi * z1)) * params.eps
    history = []
    for _ in range(max_iter):
        s = _core_radius(a, z1, params)
        if s >= 0.5 * z1:
            raise GeometryError(f"core radius {s:.4g} reaches half the ring radius {z1:.4g}")
        hz = regular_correction((z1, 0.0), z1, s, params.eps)
        a_new = (rhs0 - hz) / (lg / (2.0 * np.pi) * (1.0 - np.log(2.0 * z1) / np.log(s)))
        change = abs(a_new - a) / abs(a_new)
        history.append(change)
        a = a_new
        if change < tol:
            s = _core_radius(a, z1, params)
            n_grad = s * z1 * z1 / (2.0 * params.eps**2)
            return CoreAnsatz(z1=float(z1), s=float(s), a=float(a), mu=float(mu), n_grad=float(n_grad))
    raise SolverError("core parameter iteration did not converge", history=history)


def center_equation(x: float, params: RingParameters) -> float:
    """g(x) = W x ln(1/eps) - (kappa/4pi)(ln(8x/s0(x)) - 1/4), s0 = eps sqrt(kappa/(pi x))."""
    s0 = np.sqrt(params.kappa / (np.pi * x)) * params.eps
    return params.W * x * params.log_eps - params.kappa / (4.0 * np.pi) * (np.log(8.0 * x / s0) - 0.25)


def center_equation_slope(x: float, params: RingParameters) -> float:
    return params.W * params.log_eps - 3.0 * params.kappa / (8.0 * np.pi * x)


def thin_core_radius(x: float, params: RingParameters) -> float:
    return float(np.sqrt(params.kappa / (np.pi * x)) * params.eps)


def solve_center_z1(params: RingParameters) -> float:
    """Zero of g on its increasing branch, which contains kappa/(4 pi W) asymptotically."""
    # g is convex with its minimum at x_m; the physical root lies above it
    x_m = 3.0 * params.kappa / (8.0 * np.pi * params.W * params.log_eps)
    hi = 10.0 * params.r_star
    if center_equation(x_m, params) >= 0.0 or center_equation(hi, params) <= 0.0:
        raise SolverError("center equation has no sign change on its increasing branch")
    return float(brentq(center_equation, x_m, hi, args=(params,), xtol=1e-15, rtol=1e-15, maxiter=500))


def U_field(x, core: CoreAnsatz, params: RingParameters, method: str = "contour"):
    """Augmented ansatz stream minus the flux constant."""
    r, _ = _xy(x)
    lg = params.log_eps
    out = (singular_part(x, core, params) + regular_correction(x, core.z1, core.s, params.eps, method)
           - 0.5 * params.W * np.asarray(r) ** 2 * lg - core.mu)
    return float(out) if np.ndim(out) == 0 else out


def curlyW(xdist, core: CoreAnsatz, params: RingParameters):
    """Radial factor multiplying (x1 - z1) in the first-order expansion of U."""
    s, z1, e2 = core.s, core.z1, params.eps**2
    x = np.asarray(xdist, dtype=float)
    if np.any(x <= 0.0):
        raise DomainError("distance must be positive")
    inner = x < s
    with np.errstate(divide="ignore"):
        b1 = np.where(inner, s * s - x * x, 2.0 * np.log(s / x))
        b2 = np.where(inner, 2.0 * s * s - x * x, s**4 / (x * x))
    out = (s * s / (4.0 * e2) * z1 * np.log(1.0 / s) - params.W * z1 * params.log_eps
           + z1 / (8.0 * e2) * b1 + 3.0 * z1 / (16.0 * e2) * b2
           + s * s / (4.0 * e2) * z1 * (np.log(8.0 * z1) - 1.0))
    return float(out) if out.ndim == 0 else out


def boundary_first_order(theta, core: CoreAnsatz, params: RingParameters):
    """Relative radial offset t(theta) of the level set U = 0 from the circle of radius s.

    The physical offset is s * t(theta).
    """
    out = np.cos(np.asarray(theta, dtype=float)) * curlyW(core.s, core, params) / core.n_grad
    return float(out) if out.ndim == 0 else out
