"""Steady cross-sections as fixed points of the level-set map.

A cross-section A is star-shaped about a centre c and stored as radii on a
uniform angular grid. The level-set map sends A to {Psi_aug > mu}, where
Psi_aug = psi_A - (W/2) r^2 ln(1/eps) is the augmented stream of A itself.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq
from scipy.optimize.elementwise import find_root

from .ansatz import CoreAnsatz, RingParameters, solve_center_z1, solve_core_parameters
from .contour import Contour, spectral_derivative, trig_eval, trig_resample
from .errors import DomainError, GeometryError, SolverError, TopologyError
from .kernel import HalfPlanePoint, PatchField

log = logging.getLogger(__name__)

DEFAULT_NODES = 256
DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 200


@dataclass(frozen=True, eq=False)
class BoundaryCurve:
    """Star-shaped curve rho(theta) about ``center`` on theta_i = 2 pi i / N."""

    center: HalfPlanePoint
    thetas: np.ndarray
    radii: np.ndarray

    def __post_init__(self):
        th = np.asarray(self.thetas, dtype=float)
        rad = np.ascontiguousarray(self.radii, dtype=float)
        n = rad.size
        if th.shape != rad.shape or n < 8:
            raise GeometryError("thetas and radii must be matching arrays of at least 8 nodes")
        if not np.allclose(th, 2.0 * np.pi * np.arange(n) / n, rtol=0.0, atol=1e-12):
            raise GeometryError("angles must be the uniform grid 2*pi*i/N")
        if np.any(~np.isfinite(rad)) or np.any(rad <= 0.0):
            raise GeometryError("radii must be finite and positive")
        object.__setattr__(self, "thetas", th)
        object.__setattr__(self, "radii", rad)
        if not isinstance(self.center, HalfPlanePoint):
            object.__setattr__(self, "center", HalfPlanePoint(*map(float, self.center)))

    @classmethod
    def from_radii(cls, center, radii) -> "BoundaryCurve":
        radii = np.asarray(radii, dtype=float)
        return cls(HalfPlanePoint(*map(float, center)), 2.0 * np.pi * np.arange(radii.size) / radii.size, radii)

    @classmethod
    def circle(cls, center, radius: float, n: int = DEFAULT_NODES) -> "BoundaryCurve":
        return cls.from_radii(center, np.full(n, float(radius)))

    @property
    def n(self) -> int:
        return self.radii.size

    def contour(self) -> Contour:
        return Contour.from_polar(self.center.r, self.center.z, self.thetas, self.radii)

    def points(self) -> tuple[np.ndarray, np.ndarray]:
        return (self.center.r + self.radii * np.cos(self.thetas),
                self.center.z + self.radii * np.sin(self.thetas))

    def radius_at(self, theta) -> np.ndarray:
        return trig_eval(self.radii, theta)

    def resampled(self, n: int) -> "BoundaryCurve":
        return BoundaryCurve.from_radii(self.center, trig_resample(self.radii, n))

    def mean_radius(self) -> float:
        return float(np.sqrt(np.mean(self.radii**2)))

    def area(self) -> float:
        return float(np.pi * np.mean(self.radii**2))

    def centroid(self) -> tuple[float, float]:
        w = 2.0 * np.pi / self.n
        area = self.area()
        m3 = np.sum(self.radii**3 * np.cos(self.thetas)) * w / 3.0
        m3z = np.sum(self.radii**3 * np.sin(self.thetas)) * w / 3.0
        return self.center.r + m3 / area, self.center.z + m3z / area

    def translated(self, dz: float = 0.0, dr: float = 0.0) -> "BoundaryCurve":
        return BoundaryCurve(HalfPlanePoint(self.center.r + dr, self.center.z + dz), self.thetas, self.radii)

    def about(self, center) -> "BoundaryCurve":
        """The same curve re-parametrised by rays from another interior centre."""
        cr, cz = map(float, center)
        dr, dz = cr - self.center.r, cz - self.center.z
        if np.hypot(dr, dz) == 0.0:
            return BoundaryCurve(HalfPlanePoint(cr, cz), self.thetas, self.radii)
        er, ez = np.cos(self.thetas), np.sin(self.thetas)
        phi = self.thetas.copy()
        for _ in range(50):
            rho = trig_eval(self.radii, phi)
            drho = trig_eval(self.radii, phi, 1)
            pr = rho * np.cos(phi) - dr
            pz = rho * np.sin(phi) - dz
            g = er * pz - ez * pr
            dpr = drho * np.cos(phi) - rho * np.sin(phi)
            dpz = drho * np.sin(phi) + rho * np.cos(phi)
            dg = er * dpz - ez * dpr
            step = g / dg
            phi = phi - step
            if np.max(np.abs(step)) < 1e-15:
                break
        rho = trig_eval(self.radii, phi)
        t = er * (rho * np.cos(phi) - dr) + ez * (rho * np.sin(phi) - dz)
        if np.any(t <= 0.0):
            raise GeometryError("new centre is not inside the curve")
        return BoundaryCurve(HalfPlanePoint(cr, cz), self.thetas, t)

    def mirrored(self) -> "BoundaryCurve":
        """Reflection about the horizontal line through the centre."""
        idx = (-np.arange(self.n)) % self.n
        return BoundaryCurve(self.center, self.thetas, self.radii[idx])

    def symmetrize(self) -> "BoundaryCurve":
        return BoundaryCurve(self.center, self.thetas, 0.5 * (self.radii + self.mirrored().radii))

    def symmetry_defect(self) -> float:
        """max |rho(theta) - rho(-theta)|."""
        return float(np.max(np.abs(self.radii - self.mirrored().radii)))

    def curvature(self) -> np.ndarray:
        rho = self.radii
        d1 = spectral_derivative(rho)
        d2 = spectral_derivative(rho, 2)
        return (rho * rho + 2.0 * d1 * d1 - rho * d2) / (rho * rho + d1 * d1) ** 1.5

    def is_convex(self) -> bool:
        return bool(np.all(self.curvature() > 0.0))


def measure_circulation(curve: BoundaryCurve, eps: float) -> float:
    """eps^-2 times the integral of r over the enclosed region, by polar quadrature."""
    rho = curve.radii
    w = 2.0 * np.pi / curve.n
    total = np.sum(curve.center.r * rho**2 / 2.0 + rho**3 * np.cos(curve.thetas) / 3.0) * w
    return float(total / eps**2)


def _disc_radial_graph(thetas, center: HalfPlanePoint, disc_center, disc_radius: float):
    dr = float(disc_center[0]) - center.r
    dz = float(disc_center[1]) - center.z
    if np.hypot(dr, dz) >= disc_radius:
        raise GeometryError("curve centre lies outside the disc")
    proj = np.cos(thetas) * dr + np.sin(thetas) * dz
    return proj + np.sqrt(disc_radius**2 - dr * dr - dz * dz + proj * proj)


def abs_periodic_integral(values: np.ndarray) -> float:
    """Integral over [0, 2 pi) of |f| for fine periodic samples, splitting at sign changes."""
    n = values.size
    h = 2.0 * np.pi / n
    a = values
    b = np.roll(values, -1)
    same = a * b >= 0.0
    total = np.sum(0.5 * h * np.abs(a + b)[same])
    aa, bb = a[~same], b[~same]
    frac = aa / (aa - bb)
    total += np.sum(0.5 * h * (frac * np.abs(aa) + (1.0 - frac) * np.abs(bb)))
    return float(total)


def symmetric_difference_area(curve: BoundaryCurve, disc_center, disc_radius: float, fine: int = 1 << 15) -> float:
    """|A delta B| by radial integration of |rho^2 - r_B^2| / 2 about the curve centre."""
    rho = trig_resample(curve.radii, fine)
    th = 2.0 * np.pi * np.arange(fine) / fine
    rb = _disc_radial_graph(th, curve.center, disc_center, disc_radius)
    return 0.5 * abs_periodic_integral(rho * rho - rb * rb)


def curve_symmetric_difference(a: BoundaryCurve, b: BoundaryCurve, fine: int = 1 << 14) -> float:
    """|A delta B| for two curves, with B re-parametrised about the centre of A."""
    bb = b.about((a.center.r, a.center.z))
    ra = trig_resample(a.radii, fine)
    rb = trig_resample(bb.radii, fine)
    return 0.5 * abs_periodic_integral(ra * ra - rb * rb)


def hausdorff_distance(a: BoundaryCurve, b: BoundaryCurve, modulo_z: bool = True, fine: int = 4096) -> float:
    """Hausdorff distance between two curves, optionally after matching z-centroids."""
    if modulo_z:
        b = b.translated(dz=a.centroid()[1] - b.centroid()[1])
    pa = np.stack(a.resampled(fine).points(), -1)
    pb = np.stack(b.resampled(fine).points(), -1)

    def one_sided(p, q):
        best = np.empty(p.shape[0])
        for lo in range(0, p.shape[0], 512):
            d = np.linalg.norm(p[lo:lo + 512, None, :] - q[None, :, :], axis=-1)
            best[lo:lo + 512] = d.min(axis=1)
        return best.max()

    return float(max(one_sided(pa, pb), one_sided(pb, pa)))


@dataclass
class SteadyRingSolution:
    params: RingParameters
    core: CoreAnsatz
    curve: BoundaryCurve
    kappa_measured: float
    mu_used: float
    iterations: int
    final_update: float
    mode: str = "fixed_kappa"
    history: list = field(default_factory=list)
    contraction_ratio: float = float("nan")
    cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def eps(self) -> float:
        return self.params.eps

    def contour(self) -> Contour:
        return self.curve.contour()

    def field(self) -> PatchField:
        return PatchField(self.contour(), self.params.eps)


# ---------------------------------------------------------------------------
# level-set maps


def augmented_stream(field: PatchField, params: RingParameters, r, z):
    vals = field.evaluate(r, z)
    return vals.value - 0.5 * params.frame_speed * np.asarray(r) ** 2


def picard_step(curve: BoundaryCurve, params: RingParameters, mu: float, xtol: float = 1e-12) -> BoundaryCurve:
    """One level-set step: each ray's new radius solves Psi_aug = mu in [0.2, 5] x old radius."""
    f = PatchField(curve.contour(), params.eps)
    c = curve.center
    er, ez = np.cos(curve.thetas), np.sin(curve.thetas)
    scale = curve.mean_radius()

    def g(rho, idx):
        idx = idx.astype(int)
        r = c.r + rho * er[idx]
        z = c.z + rho * ez[idx]
        return augmented_stream(f, params, r, z) - mu

    lo = 0.2 * curve.radii
    hi = 5.0 * curve.radii
    if np.any(c.r - hi <= 0.0):
        hi = np.minimum(hi, 0.999 * c.r)
    idx = np.arange(curve.n, dtype=float)
    glo, ghi = g(lo, idx), g(hi, idx)
    bad = np.flatnonzero(~((glo > 0.0) & (ghi < 0.0)))
    if bad.size:
        if np.all(glo[bad] <= 0.0):
            raise TopologyError("level set is empty on some rays", theta=float(curve.thetas[bad[0]]))
        raise TopologyError("no sign change along ray", theta=float(curve.thetas[bad[0]]))
    res = find_root(g, (lo, hi), args=(idx,), tolerances=dict(xatol=xtol * scale, xrtol=0.0, fatol=0.0, frtol=0.0),
                    maxiter=200)
    if not np.all(res.success):
        raise SolverError("ray root-find failed")
    return BoundaryCurve(c, curve.thetas, res.x)


@dataclass
class _RayData:
    value: np.ndarray
    slope: np.ndarray
    curv_in: np.ndarray
    curv_out: np.ndarray


def _ray_data(curve: BoundaryCurve, params: RingParameters) -> _RayData:
    """Psi_aug, its ray derivative and one-sided second ray derivatives at the nodes."""
    f = PatchField(curve.contour(), params.eps)
    b = f.boundary
    r = f.contour.r
    wl = params.frame_speed
    er, ez = np.cos(curve.thetas), np.sin(curve.thetas)
    value = b.value - 0.5 * wl * r * r
    slope = (b.d_r - wl * r) * er + b.d_z * ez
    curv = []
    for inside in (True, False):
        hrr, hrz, hzz = f.boundary_hessian(inside)
        curv.append(er * er * (hrr - wl) + 2.0 * er * ez * hrz + ez * ez * hzz)
    return _RayData(value, slope, curv[0], curv[1])


def _ray_offsets(data: _RayData, mu: float) -> np.ndarray:
    """Root nearest zero of value + slope t + curv t^2 / 2 = mu, with the curvature of the side it lands on."""
    delta = mu - data.value
    first = delta / data.slope
    curv = np.where(first > 0.0, data.curv_out, data.curv_in)
    disc = data.slope**2 + 2.0 * curv * delta
    ok = disc > 0.0
    t = first.copy()
    root = np.sqrt(np.where(ok, disc, 0.0))
    t[ok] = 2.0 * delta[ok] / (data.slope[ok] + np.sign(data.slope[ok]) * root[ok])
    return t


def _circulation_of(center_r: float, thetas, radii, eps: float) -> float:
    w = 2.0 * np.pi / radii.size
    return float(np.sum(center_r * radii**2 / 2.0 + radii**3 * np.cos(thetas) / 3.0) * w / eps**2)


def _mu_for_circulation(curve: BoundaryCurve, data: _RayData, params: RingParameters, kappa: float, mu_guess: float):
    def resid(mu):
        rad = curve.radii + _ray_offsets(data, mu)
        if np.any(rad <= 0.0):
            return -kappa
        return _circulation_of(curve.center.r, curve.thetas, rad, params.eps) - kappa

    span = float(np.max(np.abs(data.slope)) * curve.mean_radius())
    lo, hi = mu_guess - 0.05 * span, mu_guess + 0.05 * span
    for _ in range(60):
        if resid(lo) > 0.0 and resid(hi) < 0.0:
            break
        lo -= 0.1 * span
        hi += 0.1 * span
    else:
        raise SolverError("could not bracket the flux constant for the circulation constraint")
    return brentq(resid, lo, hi, xtol=1e-15 * max(1.0, abs(mu_guess)), rtol=1e-15, maxiter=200)


def level_set_update(curve: BoundaryCurve, params: RingParameters, kappa: float | None = None,
                     mu: float | None = None, mu_guess: float | None = None):
    """Level-set map with on-boundary ray expansion; returns (new curve, mu).

    With ``kappa`` given, mu is re-solved so the new curve carries that
    circulation; otherwise ``mu`` is used as is.
    """
    data = _ray_data(curve, params)
    if kappa is not None:
        guess = float(np.mean(data.value)) if mu_guess is None else mu_guess
        mu = _mu_for_circulation(curve, data, params, kappa, guess)
    rad = curve.radii + _ray_offsets(data, mu)
    if np.any(rad <= 0.0) or np.any(rad >= curve.center.r):
        raise TopologyError("level set left the star-shaped class", theta=float(curve.thetas[np.argmin(rad)]))
    return BoundaryCurve(curve.center, curve.thetas, rad), float(mu)


def recenter_z(curve: BoundaryCurve, z0: float = 0.0) -> BoundaryCurve:
    """Translate so the z-centroid sits at z0, keeping the ray centre at (r_c, z0)."""
    zc = curve.centroid()[1]
    moved = curve.translated(dz=z0 - zc)
    if abs(moved.center.z - z0) < 1e-15 * curve.mean_radius():
        return BoundaryCurve(HalfPlanePoint(curve.center.r, z0), curve.thetas, curve.radii)
    return moved.about((curve.center.r, z0))


class AndersonMixer:
    """Type-II Anderson mixing for x = P(x)."""

    def __init__(self, memory: int):
        self.memory = memory
        self.xs, self.gs = [], []

    def reset(self):
        self.xs.clear()
        self.gs.clear()

    def __call__(self, x, gx, omega=1.0):
        self.xs.append(x.copy())
        self.gs.append(gx.copy())
        if len(self.xs) > self.memory + 1:
            self.xs.pop(0)
            self.gs.pop(0)
        f = [g - xx for g, xx in zip(self.gs, self.xs)]
        if len(f) == 1 or self.memory == 0:
            return x + omega * f[-1]
        df = np.stack([f[i + 1] - f[i] for i in range(len(f) - 1)], axis=1)
        gamma, *_ = np.linalg.lstsq(df, f[-1], rcond=1e-12)
        dx = np.stack([self.xs[i + 1] - self.xs[i] for i in range(len(f) - 1)], axis=1)
        return x + omega * f[-1] - (dx + omega * df) @ gamma


def solve_fixed_kappa(params: RingParameters, curve: BoundaryCurve, kappa: float | None = None,
                      tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER, memory: int = 8,
                      mu_guess: float | None = None, omega: float = 1.0):
    """Fixed point of the level-set map at fixed circulation, accelerated by Anderson mixing.

    Returns (curve, mu, iterations, history) where history holds the sup-norm
    of each level-set update.
    """
    kappa = params.kappa if kappa is None else kappa
    scale = curve.mean_radius()
    accel = AndersonMixer(memory)
    history = []
    mu = mu_guess
    x = curve
    best = np.inf
    for it in range(1, max_iter + 1):
        gx, mu = level_set_update(x, params, kappa=kappa, mu_guess=mu)
        gx = recenter_z(gx, 0.0)
        update = float(np.max(np.abs(gx.radii - x.radii)))
        history.append(update)
        log.debug("iteration %d update %.3e mu %.12g", it, update, mu)
        if update < tol * scale:
            return gx, mu, it, history
        if update > 10.0 * best:
            # oscillation: restart the mixing with damping
            accel.reset()
            omega = 0.5
        best = min(best, update)
        new = accel(x.radii, gx.radii, omega)
        if np.any(new <= 0.0):
            accel.reset()
            new = gx.radii
        x = BoundaryCurve(x.center, x.thetas, new)
    raise SolverError(f"no convergence in {max_iter} iterations (last update {history[-1]:.3e})", history=history)


def _observed_ratio(history) -> float:
    h = np.asarray(history, dtype=float)
    if h.size < 2 or h[0] <= 0.0:
        return float("nan")
    return float((h[-1] / h[0]) ** (1.0 / (h.size - 1)))


def solve_steady(params: RingParameters, mode: str = "fixed_kappa", *, mu: float | None = None,
                 n: int = DEFAULT_NODES, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
                 seed_scale: float = 1.0, seed: BoundaryCurve | None = None, z1: float | None = None,
                 memory: int = 8) -> SteadyRingSolution:
    """Steady ring for (kappa, W, eps).

    ``fixed_kappa`` re-solves mu every step so the circulation equals kappa.
    ``fixed_mu`` holds the flux constant (default: the ansatz value) and
    finds the circulation carrying it by a secant iteration over
    fixed-circulation solves.
    """
    if params.eps > 0.2:
        raise DomainError("steady solves are supported for eps <= 0.2")
    z1 = solve_center_z1(params) if z1 is None else z1
    core = solve_core_parameters(params, z1)
    if seed is None:
        seed = BoundaryCurve.circle((z1, 0.0), seed_scale * core.s, n)
    if mode == "fixed_kappa":
        curve, mu_used, its, history = solve_fixed_kappa(params, seed, tol=tol, max_iter=max_iter, memory=memory,
                                                         mu_guess=core.mu)
    elif mode == "fixed_mu":
        target = core.mu if mu is None else float(mu)
        curve, mu_used, its, history = _solve_fixed_mu(params, seed, target, tol, max_iter, memory, core.mu)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    kappa = measure_circulation(curve, params.eps)
    return SteadyRingSolution(params=params, core=core, curve=curve, kappa_measured=kappa, mu_used=mu_used,
                              iterations=its, final_update=history[-1], mode=mode, history=history,
                              contraction_ratio=_observed_ratio(history))


def _solve_fixed_mu(params, seed, target, tol, max_iter, memory, mu_guess):
    # the plain fixed-mu map is unstable in the area mode, so solve mu(kappa) = target instead
    history = []
    total = 0
    curve = seed

    def run(kappa, start, guess):
        nonlocal total
        c, m, its, h = solve_fixed_kappa(params, start, kappa=kappa, tol=tol, max_iter=max_iter, memory=memory,
                                         mu_guess=guess)
        total += its
        history.extend(h)
        return c, m

    match = 1e-10 * abs(target)
    k0 = params.kappa
    curve, m0 = run(k0, curve, mu_guess)
    if abs(m0 - target) <= match:
        return curve, m0, total, history
    # d mu / d kappa ~ mu / kappa gives the second point
    k1 = k0 * (1.0 + 0.5 * (target - m0) / m0)
    curve, m1 = run(k1, curve, m0)
    for _ in range(40):
        if abs(m1 - target) <= match:
            return curve, m1, total, history
        k2 = k1 + (target - m1) * (k1 - k0) / (m1 - m0)
        if abs(k2 - k1) <= 1e-13 * k1:
            return curve, m1, total, history
        k0, m0 = k1, m1
        k1 = k2
        curve, m1 = run(k1, curve, m1)
    raise SolverError("flux constant not matched by the circulation secant", history=history)


def rescale_to_circulation(sol: SteadyRingSolution, kappa_target: float) -> SteadyRingSolution:
    """Map a solution onto circulation ``kappa_target`` by the scaling symmetry.

    With k = kappa_measured / kappa_target, lengths scale by k, eps by k^2
    and the translation speed W ln(1/eps) by k^-2, while psi(x) -> psi(x/k)
    and mu are unchanged; the circulation then scales by 1/k exactly.
    """
    k = sol.kappa_measured / kappa_target
    p = sol.params
    eps = p.eps * k * k
    if not 0.0 < eps < 1.0:
        raise DomainError(f"rescaled eps {eps:.6g} leaves (0, 1)")
    speed = p.frame_speed / (k * k)
    params = RingParameters(kappa=float(kappa_target), W=float(speed / -np.log(eps)), eps=float(eps))
    c = sol.curve
    curve = BoundaryCurve(HalfPlanePoint(c.center.r * k, c.center.z * k), c.thetas, c.radii * k)
    z1 = sol.core.z1 * k
    s = sol.core.s * k
    n_grad = s * z1 * z1 / (2.0 * eps * eps)
    a = np.pi * z1 * z1 * s * s * -np.log(s) / (eps * eps * params.log_eps)
    core = CoreAnsatz(z1=z1, s=s, a=a, mu=sol.core.mu, n_grad=n_grad)
    return replace(sol, params=params, core=core, curve=curve, kappa_measured=measure_circulation(curve, eps),
                   cache={})


def boundary_residual(sol: SteadyRingSolution) -> float:
    """max |Psi_aug - mu| over the boundary nodes."""
    data = _ray_data(sol.curve, sol.params)
    return float(np.max(np.abs(data.value - sol.mu_used)))
