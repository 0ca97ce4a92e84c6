"""Contour dynamics of axisymmetric vortex patches and the stability experiment.

The boundary moves with the meridional velocity of the patch,
v = (-d psi/dz, d psi/dr) / r, evaluated on the contour itself. The curve is
kept as a radial graph about its centroid, so the nodes ride on fixed rays
and only the normal part of v changes the state; tangential sliding along
the boundary, which RK4 would slowly damp, never enters.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize_scalar

from .contour import Contour, spectral_derivative, trig_resample
from .errors import GeometryError, RingError, TopologyError
from .freeboundary import BoundaryCurve, SteadyRingSolution, abs_periodic_integral
from .kernel import HalfPlanePoint, PatchField

log = logging.getLogger(__name__)

DYNAMICS_NODES = 96
STEPS_PER_TURNOVER = 200


def turnover_time(eps: float) -> float:
    """Rotation time scale of a core with potential vorticity 1/eps^2."""
    return 4.0 * np.pi * eps * eps


@dataclass(frozen=True)
class PatchState:
    curve: BoundaryCurve
    eps: float
    time: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.eps < 1.0:
            raise GeometryError("eps must lie in (0, 1)")
        if self.curve.center.r - np.max(self.curve.radii) <= 0.0:
            raise GeometryError("patch must stay inside the open half-plane")

    @classmethod
    def from_solution(cls, sol: SteadyRingSolution, n: int = DYNAMICS_NODES) -> "PatchState":
        return cls(sol.curve.resampled(n), sol.params.eps, 0.0)

    def contour(self) -> Contour:
        return self.curve.contour()

    def field(self) -> PatchField:
        return PatchField(self.contour(), self.eps)


class ConservedQuantities(NamedTuple):
    circulation: float
    impulse: float
    energy: float
    area: float
    volume: float


# ---------------------------------------------------------------------------
# time stepping


def radial_velocity(curve: BoundaryCurve, eps: float, frame_speed: float = 0.0) -> np.ndarray:
    """d rho / dt on the rays of a star-shaped curve moved by the patch velocity.

    Kinematic condition for the graph rho(theta): rho_t = v_rho - (rho'/rho) v_theta.
    """
    c = curve.contour()
    if np.any(c.r <= 0.0):
        raise TopologyError("a node reached the symmetry axis", state=curve)
    vals = PatchField(c, eps).boundary
    vr = -vals.d_z / c.r
    vz = vals.d_r / c.r - frame_speed
    cos_t, sin_t = np.cos(curve.thetas), np.sin(curve.thetas)
    v_rho = vr * cos_t + vz * sin_t
    v_theta = -vr * sin_t + vz * cos_t
    drho = spectral_derivative(curve.radii)
    return v_rho - drho / curve.radii * v_theta


def _with_radii(curve: BoundaryCurve, radii: np.ndarray) -> BoundaryCurve:
    if np.any(~np.isfinite(radii)) or np.any(radii <= 0.0):
        bad = int(np.argmin(np.where(np.isfinite(radii), radii, -np.inf)))
        raise TopologyError("curve lost star-shapedness about its centre", theta=float(curve.thetas[bad]),
                            state=curve)
    return BoundaryCurve(curve.center, curve.thetas, radii)


def step(patch: PatchState, dt: float, frame_speed: float = 0.0) -> PatchState:
    """One classical RK4 step of the boundary, then re-centring on the centroid.

    Negative dt integrates backwards in time.
    """
    if not np.isfinite(dt) or dt == 0.0:
        raise ValueError("dt must be finite and non-zero")
    limit = stable_dt(patch)
    if abs(dt) > limit:
        raise ValueError(f"|dt| = {abs(dt):.3g} exceeds the RK4 stability bound {limit:.3g}")
    eps, c0 = patch.eps, patch.curve
    rho = c0.radii
    k1 = radial_velocity(c0, eps, frame_speed)
    k2 = radial_velocity(_with_radii(c0, rho + 0.5 * dt * k1), eps, frame_speed)
    k3 = radial_velocity(_with_radii(c0, rho + 0.5 * dt * k2), eps, frame_speed)
    k4 = radial_velocity(_with_radii(c0, rho + dt * k3), eps, frame_speed)
    moved = _with_radii(c0, rho + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
    try:
        curve = moved.about(moved.centroid())
    except GeometryError as exc:
        raise TopologyError(str(exc), state=moved) from exc
    return PatchState(curve, eps, patch.time + dt)


def stable_dt(patch: PatchState) -> float:
    """RK4 step bound from the fastest boundary wave.

    Mode k on a core of vorticity w = r/eps^2 turns at about k w / 2; the
    classical RK4 region reaches 2 sqrt(2) on the imaginary axis.
    """
    omega = (patch.curve.center.r + np.max(patch.curve.radii)) / patch.eps**2
    return float(2.0 * np.sqrt(2.0) / (0.5 * omega * (patch.curve.n // 2)))


def evolve(patch: PatchState, dt: float, steps: int, frame_speed: float = 0.0, callback=None) -> PatchState:
    """Advance ``steps`` RK4 steps; ``callback(i, state)`` after each one."""
    for i in range(steps):
        patch = step(patch, dt, frame_speed)
        if callback is not None:
            callback(i + 1, patch)
    return patch


def node_distance(a: PatchState, b: PatchState) -> float:
    """Max radial gap between two nearby curves, compared about the centre of ``a``."""
    bb = b.curve.about((a.curve.center.r, a.curve.center.z))
    return float(np.max(np.abs(a.curve.radii - trig_resample(bb.radii, a.curve.n))))


def richardson_ratio(patch: PatchState, dt: float, steps: int, frame_speed: float = 0.0) -> float:
    """|x_dt - x_dt/2| / |x_dt/2 - x_dt/4| at a fixed final time (16 for RK4)."""
    runs = [evolve(patch, dt / k, steps * k, frame_speed) for k in (1, 2, 4)]
    return node_distance(runs[1], runs[0]) / node_distance(runs[2], runs[1])


# ---------------------------------------------------------------------------
# conserved quantities


def conserved_quantities(patch: PatchState) -> ConservedQuantities:
    """Circulation, impulse, energy, meridional area and volume of the core in R^3.

    The flow conserves the R^3 measure of the core (volume), not the
    meridional area, which changes as the core moves in r.
    """
    c = patch.contour()
    eps2 = patch.eps**2
    circulation = c.moment_r(1) / eps2
    impulse = np.pi * c.moment_r(3) / eps2
    # E = (pi/eps^2) int_A r psi, and int_A r psi = (2/7) of the boundary flux
    # of r psi x by homogeneity (G* has degree 2 under scaling about the axis)
    psi = PatchField(c, patch.eps).boundary.value
    flux = np.sum(c.r * psi * (c.r * c.dz - c.z * c.dr)) * c.weight
    energy = 2.0 * np.pi * flux / (7.0 * eps2)
    volume = 2.0 * np.pi * c.moment_r(1)
    return ConservedQuantities(float(circulation), float(impulse), float(energy), float(c.area()), float(volume))


# ---------------------------------------------------------------------------
# stability metric


def _radial_moment(center_r: float, cos_t: np.ndarray, rho: np.ndarray, power: int) -> np.ndarray:
    """int_0^rho (center_r + t cos)^power t dt for power 1 or 3."""
    a, c = center_r, cos_t
    if power == 1:
        return a * rho**2 / 2.0 + c * rho**3 / 3.0
    if power == 3:
        return (a**3 * rho**2 / 2.0 + a * a * c * rho**3 + 0.75 * a * c * c * rho**4
                + c**3 * rho**5 / 5.0)
    raise ValueError("power must be 1 or 3")


def _contains(curve: BoundaryCurve, point) -> bool:
    dr = point[0] - curve.center.r
    dz = point[1] - curve.center.z
    dist = np.hypot(dr, dz)
    if dist == 0.0:
        return True
    return bool(dist < 0.999 * curve.radius_at(np.arctan2(dz, dr)))


def _region_moments(curve: BoundaryCurve) -> tuple[float, float]:
    c = np.cos(curve.thetas)
    w = 2.0 * np.pi / curve.n
    return (float(np.sum(_radial_moment(curve.center.r, c, curve.radii, 1)) * w),
            float(np.sum(_radial_moment(curve.center.r, c, curve.radii, 3)) * w))


def symmetric_difference_moments(a: BoundaryCurve, b: BoundaryCurve, fine: int = 1 << 13) -> tuple[float, float]:
    """(int r, int r^3) over A delta B.

    Exact polar integration about the centre of A when it lies inside B;
    otherwise the moments of A plus those of B, an upper bound used only far
    from the optimal shift.
    """
    if not _contains(b, (a.center.r, a.center.z)):
        ma, mb = _region_moments(a), _region_moments(b)
        return ma[0] + mb[0], ma[1] + mb[1]
    bb = b.about((a.center.r, a.center.z))
    th = 2.0 * np.pi * np.arange(fine) / fine
    ra = trig_resample(a.radii, fine)
    rb = trig_resample(bb.radii, fine)
    c = np.cos(th)
    out = []
    for power in (1, 3):
        gap = _radial_moment(a.center.r, c, ra, power) - _radial_moment(a.center.r, c, rb, power)
        out.append(abs_periodic_integral(gap))
    return out[0], out[1]


def composite_norm(m1: float, m3: float, eps: float) -> float:
    """L1 + L2 + r^2-weighted L1 norms in R^3 of eps^-2 times an indicator with moments m1, m3."""
    l1 = 2.0 * np.pi * m1 / eps**2
    l2 = np.sqrt(2.0 * np.pi * m1) / eps**2
    weighted = 2.0 * np.pi * m3 / eps**2
    return float(l1 + l2 + weighted)


def metric_at_shift(patch: PatchState, reference: PatchState, tau: float) -> float:
    shifted = patch.curve.translated(dz=-tau)
    m1, m3 = symmetric_difference_moments(reference.curve, shifted)
    return composite_norm(m1, m3, patch.eps)


def _diameter(curve: BoundaryCurve) -> float:
    r, z = curve.resampled(max(curve.n, 256)).points()
    return float(np.max(np.hypot(r[:, None] - r[None, :], z[:, None] - z[None, :])))


def stability_metric(patch: PatchState, reference: PatchState, scan: int = 41, xtol: float = 1e-10) -> float:
    """Composite distance minimised over z-shifts of ``patch``."""
    if patch.eps != reference.eps:
        raise GeometryError("the metric compares patches with the same eps")
    span = _diameter(patch.curve) + _diameter(reference.curve)
    offset = patch.curve.centroid()[1] - reference.curve.centroid()[1]
    taus = offset + np.linspace(-span, span, scan)
    taus = taus[np.abs(taus) <= span]
    taus = np.append(taus, offset)
    vals = np.array([metric_at_shift(patch, reference, t) for t in taus])
    best = float(taus[int(np.argmin(vals))])
    h = 2.0 * span / (scan - 1)
    res = minimize_scalar(lambda t: metric_at_shift(patch, reference, t), bracket=None,
                          bounds=(best - h, best + h), method="bounded",
                          options={"xatol": xtol * max(1.0, span)})
    return float(min(res.fun, vals.min()))


def initial_scale(reference: PatchState) -> float:
    """Composite norm of the reference patch itself."""
    m1, m3 = _region_moments(reference.curve)
    return composite_norm(m1, m3, reference.eps)


# ---------------------------------------------------------------------------
# stability experiment


@dataclass
class StabilityTrace:
    times: list = field(default_factory=list)
    distances: list = field(default_factory=list)
    conserved: list = field(default_factory=list)
    scale: float = float("nan")
    error: str | None = None
    final: PatchState | None = None

    def append(self, time: float, distance: float, quantities: ConservedQuantities) -> None:
        self.times.append(float(time))
        self.distances.append(float(distance))
        self.conserved.append(quantities)

    def max_drift(self, name: str) -> float:
        vals = np.array([getattr(q, name) for q in self.conserved])
        return float(np.max(np.abs(vals - vals[0])) / abs(vals[0]))


def perturbed_patch(sol: SteadyRingSolution, amplitude: float, mode: int = 2, n: int = DYNAMICS_NODES) -> PatchState:
    """Steady curve with radii multiplied by 1 + amplitude cos(mode theta)."""
    base = sol.curve.resampled(n)
    radii = base.radii * (1.0 + amplitude * np.cos(mode * base.thetas))
    return PatchState(BoundaryCurve(base.center, base.thetas, radii), sol.params.eps, 0.0)


def run_stability_experiment(sol: SteadyRingSolution, perturbation_amplitude: float, horizon: float | None = None,
                             dt: float | None = None, *, mode: int = 2, n: int = DYNAMICS_NODES,
                             output_every: int = 20, comoving: bool = True) -> StabilityTrace:
    """Evolve a perturbed steady ring and record its distance to the steady one.

    The horizon defaults to 20 turnover times and dt to turnover/200, halved
    while it exceeds the RK4 bound of the perturbed patch.
    """
    eps = sol.params.eps
    turn = turnover_time(eps)
    horizon = 20.0 * turn if horizon is None else float(horizon)
    reference = PatchState.from_solution(sol, n)
    state = perturbed_patch(sol, perturbation_amplitude, mode, n)
    if dt is None:
        dt = turn / STEPS_PER_TURNOVER
        while dt > stable_dt(state):
            dt *= 0.5
    dt = float(dt)
    steps = int(round(horizon / dt))
    frame = sol.params.frame_speed if comoving else 0.0
    trace = StabilityTrace(scale=initial_scale(reference))
    trace.append(0.0, stability_metric(state, reference), conserved_quantities(state))
    try:
        for i in range(1, steps + 1):
            state = step(state, dt, frame)
            if i % output_every == 0 or i == steps:
                trace.append(state.time, stability_metric(state, reference), conserved_quantities(state))
    except RingError as exc:
        log.warning("stability run stopped at t=%.6g: %s", state.time, exc)
        trace.error = str(exc)
    trace.final = state
    return trace
