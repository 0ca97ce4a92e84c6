"""Checks of the thin-core asymptotics on solved rings.

Several diagnostics need a centre z = (z1, 0) for the split of the kernel.
The default is the refined centre: the core parameters (z1, s, a) re-fitted
to the solved ring, so that the approximate stream V + H has a critical
point at the maximum point p of psi on the symmetry line and its rim value
matches the solved flux constant. The first-stage centre used to seed the
solver is available as ``center="core"``.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import brentq, minimize, minimize_scalar

from .ansatz import (CoreAnsatz, RingParameters, _core_radius, regular_correction, regular_correction_gradient,
                     singular_part)
from .contour import trig_eval
from .errors import GeometryError, SolverError
from .freeboundary import BoundaryCurve, SteadyRingSolution, symmetric_difference_area
from .kernel import PatchField, h_regular

log = logging.getLogger(__name__)

POHOZAEV_NODES = 512


# ---------------------------------------------------------------------------
# geometry


def cross_section_sigma(curve: BoundaryCurve) -> float:
    """Half the diameter of the curve, refined off the node grid."""
    m = max(4 * curve.n, 512)
    fine = curve.resampled(m)
    r, z = fine.points()
    d2 = (r[:, None] - r[None, :]) ** 2 + (z[:, None] - z[None, :]) ** 2
    i, j = np.unravel_index(np.argmax(d2), d2.shape)
    c = curve.center

    def point(u):
        rho = trig_eval(curve.radii, u)
        return c.r + rho * np.cos(u), c.z + rho * np.sin(u)

    def neg(uv):
        ar, az = point(uv[0])
        br, bz = point(uv[1])
        return -((ar - br) ** 2 + (az - bz) ** 2)

    h = 2.0 * np.pi / m
    res = minimize(neg, [fine.thetas[i], fine.thetas[j]], method="Nelder-Mead",
                   options=dict(xatol=1e-13, fatol=1e-18 * d2[i, j], initial_simplex=[
                       [fine.thetas[i], fine.thetas[j]], [fine.thetas[i] + h, fine.thetas[j]],
                       [fine.thetas[i], fine.thetas[j] + h]]))
    best = max(-res.fun, d2[i, j])
    return float(0.5 * np.sqrt(best))


def max_point(sol: SteadyRingSolution, augmented: bool = False) -> float:
    """Radial position p of the maximum of psi (or of Psi_aug) on the line z = 0.

    Golden-section search inside the core, polished by a root of the radial
    derivative.
    """
    key = ("max_point", augmented)
    if key in sol.cache:
        return sol.cache[key]
    f = stokes_field(sol)
    c = sol.curve
    wl = sol.params.frame_speed if augmented else 0.0
    zc = c.centroid()[1]
    half = c.n // 2
    lo = c.center.r - 0.9 * c.radii[half]
    hi = c.center.r + 0.9 * c.radii[0]

    def value(x):
        return float(f.evaluate(x, zc).value) - 0.5 * wl * x * x

    def slope(x):
        return float(f.evaluate(x, zc).d_r) - wl * x

    res = minimize_scalar(lambda x: -value(x), bracket=(lo, c.center.r, hi), method="golden", tol=1e-9)
    x = float(res.x)
    step = 1e-3 * (hi - lo)
    a, b = max(lo, x - step), min(hi, x + step)
    if slope(a) > 0.0 > slope(b):
        x = brentq(slope, a, b, xtol=1e-15, rtol=1e-15)
    sol.cache[key] = x
    return x


def fit_refined_core(sol: SteadyRingSolution, tol: float = 1e-13, max_iter: int = 100) -> CoreAnsatz:
    """Core parameters re-fitted to a solved ring.

    Solves, for (z1, s, a): the rim-value equation with the solved flux
    constant, the gradient-match relation between a and s, and a vanishing
    radial derivative of V + H at the maximum point p.
    """
    if "refined_core" in sol.cache:
        return sol.cache["refined_core"]
    params: RingParameters = sol.params
    eps, lg, mu = params.eps, params.log_eps, sol.mu_used
    p = max_point(sol)
    z1 = sol.core.z1
    a = sol.core.a
    for _ in range(max_iter):
        for _ in range(max_iter):
            s = _core_radius(a, z1, params)
            hz = regular_correction((z1, 0.0), z1, s, eps)
            a_new = (mu + 0.5 * params.W * z1 * z1 * lg - hz) / (lg / (2.0 * np.pi) * (1.0 - np.log(2.0 * z1) / np.log(s)))
            done = abs(a_new - a) <= tol * abs(a_new)
            a = a_new
            if done:
                break
        s = _core_radius(a, z1, params)
        if abs(p - z1) >= s:
            raise GeometryError("maximum point lies outside the fitted core")
        rim = a * lg / (2.0 * np.pi)
        # radial derivative of the mirror profile (log branch) at p
        d_mirror = rim / (np.log(s) * (p + z1))
        d_h = regular_correction_gradient((p, 0.0), z1, s, eps)[0]
        z1_new = p - 2.0 * eps * eps / (z1 * z1) * (d_h - d_mirror)
        done = abs(z1_new - z1) <= tol * z1
        z1 = z1_new
        if done:
            s = _core_radius(a, z1, params)
            core = CoreAnsatz(z1=float(z1), s=float(s), a=float(a), mu=float(mu),
                              n_grad=float(s * z1 * z1 / (2.0 * eps * eps)))
            sol.cache["refined_core"] = core
            return core
    raise SolverError("refined core fit did not converge")


def _center(sol: SteadyRingSolution, center: str) -> CoreAnsatz:
    if center == "refined":
        return fit_refined_core(sol)
    if center == "core":
        return sol.core
    raise ValueError(f"unknown centre {center!r}")


def thin_disc_radius(sol: SteadyRingSolution, z1: float) -> float:
    """s0 = eps sqrt(kappa / (pi z1))."""
    return float(sol.params.eps * np.sqrt(sol.params.kappa / (np.pi * z1)))


def core_symmetric_difference(sol: SteadyRingSolution, center: str = "refined") -> float:
    """|A delta B_{s0}(z)|."""
    z1 = _center(sol, center).z1
    return symmetric_difference_area(sol.curve, (z1, 0.0), thin_disc_radius(sol, z1))


# ---------------------------------------------------------------------------
# Kelvin-Hicks


def kelvin_hicks_residual(sol: SteadyRingSolution, center: str = "refined") -> float:
    """W z1 ln(1/eps) - (kappa/4pi)(ln(8 z1/sigma) - 1/4) with the measured circulation."""
    z1 = _center(sol, center).z1
    sigma = cross_section_sigma(sol.curve)
    p = sol.params
    return float(p.W * z1 * p.log_eps - sol.kappa_measured / (4.0 * np.pi) * (np.log(8.0 * z1 / sigma) - 0.25))


def kelvin_hicks_residual_max_point(sol: SteadyRingSolution) -> float:
    """The same relation with z1 replaced by the maximum point of psi."""
    x = max_point(sol)
    sigma = cross_section_sigma(sol.curve)
    p = sol.params
    kappa = sol.kappa_measured
    return float(p.W * x * p.log_eps - kappa / (4.0 * np.pi) * np.log(8.0 * x / sigma) + kappa / (16.0 * np.pi))


# ---------------------------------------------------------------------------
# split of the stream function


def planar_field(sol: SteadyRingSolution, z1: float) -> PatchField:
    key = ("planar", z1)
    if key not in sol.cache:
        sol.cache[key] = PatchField(sol.contour(), sol.eps, model="planar", z1=z1)
    return sol.cache[key]


def stokes_field(sol: SteadyRingSolution) -> PatchField:
    if "stokes" not in sol.cache:
        sol.cache["stokes"] = sol.field()
    return sol.cache["stokes"]


def psi_split(sol: SteadyRingSolution, x, center: str = "refined"):
    """(psi1, psi2): the planar part (z1^2/eps^2) int_A G and the remainder."""
    z1 = _center(sol, center).z1
    pts = np.asarray(tuple(x) if not isinstance(x, np.ndarray) else x, dtype=float)
    r, z = pts[..., 0], pts[..., 1]
    psi = stokes_field(sol).evaluate(r, z).value
    psi1 = planar_field(sol, z1).evaluate(r, z).value
    psi2 = psi - psi1
    if np.ndim(psi1) == 0:
        return float(psi1), float(psi2)
    return psi1, psi2


def limit_profile(y):
    """w(y) = (1 - |y|^2)/4 inside the unit disc, ln(1/|y|)/2 outside."""
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore"):
        out = np.where(y <= 1.0, 0.25 * (1.0 - y * y), -0.5 * np.log(y))
    return float(out) if out.ndim == 0 else out


def limit_profile_error(sol: SteadyRingSolution, radial: int = 41, angular: int = 64, center: str = "refined") -> float:
    """max |w_eps - w| over |y| <= 2 for the rescaled planar part about the maximum point."""
    z1 = _center(sol, center).z1
    p = max_point(sol)
    sigma = cross_section_sigma(sol.curve)
    prm = sol.params
    kappa = sol.kappa_measured
    rad = np.linspace(0.0, 2.0, radial)
    ang = 2.0 * np.pi * np.arange(angular) / angular
    yr = np.concatenate([[0.0], np.outer(rad[1:], np.cos(ang)).ravel()])
    yz = np.concatenate([[0.0], np.outer(rad[1:], np.sin(ang)).ravel()])
    psi1 = planar_field(sol, z1).evaluate(p + sigma * yr, sigma * yz).value
    h = float(h_regular((p, 0.0), (z1, 0.0), z1)) if p != z1 else float(h_regular((z1, 0.0), (z1, 0.0), z1))
    shift = kappa / p * h - 0.5 * prm.W * p * p * prm.log_eps - sol.mu_used
    w_eps = prm.eps**2 / (p * p * sigma * sigma) * (psi1 + shift)
    return float(np.max(np.abs(w_eps - limit_profile(np.hypot(yr, yz)))))


# ---------------------------------------------------------------------------
# weighted residual norm


def star_weight(x, z1: float):
    """rho1 rho2 = (1 + |x - z|^2)^(3/2) / (1 + x1^2) * (1/x1 + 1)."""
    r, z = np.asarray(x[..., 0]), np.asarray(x[..., 1])
    return (1.0 + (r - z1) ** 2 + z * z) ** 1.5 / (1.0 + r * r) * (1.0 / r + 1.0)


def probe_points(z1: float, s: float, density: int = 1) -> np.ndarray:
    """Structured probes: rings about the core, a mid-field ring, a far-field ring and a strip by the axis.

    Grids are nested, so raising ``density`` keeps every coarser probe.
    """
    m = 64 * density
    ang = 2.0 * np.pi * np.arange(m) / m
    rings = list(s * 0.25 * np.arange(1, 12 * density + 1) / density)
    rings += [0.5 * z1, 4.0 * z1]
    pts = [np.stack([z1 + rr * np.cos(ang), rr * np.sin(ang)], -1) for rr in rings]
    strip_z = z1 * (-3.0 + 6.0 * np.arange(32 * density + 1) / (32 * density))
    for frac in (0.02, 0.1):
        pts.append(np.stack([np.full(strip_z.size, frac * z1), strip_z], -1))
    out = np.concatenate(pts)
    return out[out[:, 0] > 0.0]


def ansatz_stream(x, core: CoreAnsatz, params: RingParameters):
    """V + H for the given core."""
    return singular_part(x, core, params) + regular_correction(x, core.z1, core.s, params.eps)


def weighted_sup(phi: np.ndarray, x: np.ndarray, z1: float) -> float:
    return float(np.max(star_weight(x, z1) * np.abs(phi)))


def residual_star_norm(sol: SteadyRingSolution, density: int = 1, center: str = "refined") -> float:
    """sup over the probe set of rho1 rho2 |psi - (V + H)|."""
    core = _center(sol, center)
    x = probe_points(core.z1, core.s, density)
    psi = stokes_field(sol).evaluate(x[:, 0], x[:, 1]).value
    phi = psi - ansatz_stream(x, core, sol.params)
    return weighted_sup(phi, x, core.z1)


# ---------------------------------------------------------------------------
# local Pohozaev identity


@dataclass(frozen=True)
class PohozaevTerms:
    lhs: float
    rhs: float
    psi2_term: float
    w_term: float
    lhs_closed: float
    psi2_closed: float
    w_closed: float
    delta: float

    @property
    def gap(self) -> float:
        return abs(self.lhs - self.rhs) / abs(self.rhs)


def pohozaev_terms(sol: SteadyRingSolution, delta: float | None = None, center: str = "refined",
                   nodes: int = POHOZAEV_NODES) -> PohozaevTerms:
    """Both sides of the local Pohozaev identity on the circle |x - z| = delta.

    The boundary side is a trapezoid rule on the circle with the kernel
    gradient of psi1; the volume integrals over A are turned into contour
    integrals over the boundary of A.
    """
    core = _center(sol, center)
    z1 = core.z1
    eps = sol.eps
    if delta is None:
        delta = min(10.0 * core.s, 0.5 * z1)
    r, z = sol.curve.points()
    reach = float(np.max(np.hypot(r - z1, z)))
    if delta <= reach:
        raise GeometryError(f"delta={delta:.4g} does not enclose the cross-section (reach {reach:.4g})")
    if delta >= z1:
        raise GeometryError("the circle must stay inside the half-plane")
    f1 = planar_field(sol, z1)
    th = 2.0 * np.pi * np.arange(nodes) / nodes
    nr, nz = np.cos(th), np.sin(th)
    g = f1.evaluate(z1 + delta * nr, delta * nz)
    dn = g.d_r * nr + g.d_z * nz
    integrand = -dn * g.d_r + 0.5 * (g.d_r**2 + g.d_z**2) * nr
    lhs = float(np.sum(integrand) * delta * 2.0 * np.pi / nodes)
    # int_A d1 psi2 = contour integral of psi2 dz (counter-clockwise)
    c = sol.contour()
    psi2_b = stokes_field(sol).boundary.value - f1.boundary.value
    int_d1_psi2 = float(np.sum(psi2_b * c.dz) * c.weight)
    coef = z1 * z1 / (eps * eps)
    psi2_term = -coef * int_d1_psi2
    w_term = coef * sol.params.frame_speed * c.moment_r(1)
    kappa = sol.params.kappa
    s0 = thin_disc_radius(sol, z1)
    base = kappa * s0 * s0 / (4.0 * eps * eps) * z1 * z1
    return PohozaevTerms(lhs=lhs, rhs=psi2_term + w_term, psi2_term=psi2_term, w_term=w_term, lhs_closed=base,
                         psi2_closed=-base * (np.log(8.0 * z1 / s0) - 1.25),
                         w_closed=kappa * sol.params.W * z1 * z1 * sol.params.log_eps, delta=float(delta))


def pohozaev_check(sol: SteadyRingSolution, delta: float | None = None, center: str = "refined"):
    """(lhs, rhs) of the local Pohozaev identity."""
    t = pohozaev_terms(sol, delta, center)
    return t.lhs, t.rhs


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class DiagnosticsReport:
    eps: float
    z1: float
    s: float
    kappa: float
    kelvin_hicks_residual: float
    kelvin_hicks_max_point: float
    sigma: float
    pohozaev_lhs: float
    pohozaev_rhs: float
    sym_diff_area: float
    residual_star_norm: float
    profile_error: float

    def __post_init__(self):
        vals = asdict(self)
        bad = [k for k, v in vals.items() if not np.isfinite(v)]
        if bad:
            raise ValueError(f"non-finite report entries: {bad}")
        if not self.sigma > 0.0:
            raise ValueError("sigma must be positive")

    @property
    def poho_gap(self) -> float:
        return abs(self.pohozaev_lhs - self.pohozaev_rhs) / abs(self.pohozaev_rhs)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["poho_gap"] = self.poho_gap
        return out


def diagnose(sol: SteadyRingSolution) -> DiagnosticsReport:
    core = fit_refined_core(sol)
    lhs, rhs = pohozaev_check(sol)
    return DiagnosticsReport(
        eps=sol.eps, z1=core.z1, s=core.s, kappa=sol.kappa_measured,
        kelvin_hicks_residual=kelvin_hicks_residual(sol),
        kelvin_hicks_max_point=kelvin_hicks_residual_max_point(sol),
        sigma=cross_section_sigma(sol.curve), pohozaev_lhs=lhs, pohozaev_rhs=rhs,
        sym_diff_area=core_symmetric_difference(sol), residual_star_norm=residual_star_norm(sol),
        profile_error=limit_profile_error(sol))


def fitted_order(eps, values) -> float:
    """Least-squares slope of log|values| against log eps."""
    x = np.log(np.asarray(eps, dtype=float))
    y = np.log(np.abs(np.asarray(values, dtype=float)))
    return float(np.polyfit(x, y, 1)[0])


def normalized_spread(values) -> float:
    """max/min of |values|, the stability factor used for scaling checks."""
    v = np.abs(np.asarray(values, dtype=float))
    return float(v.max() / v.min())
