"""Energy maximisation over vortex patches of fixed density.

The functional is E - W ln(1/eps) P over patches zeta = eps^-2 1_A whose
circulation eps^-2 int_A r is at most kappa. A bathtub step replaces A by the
super-level set of its own augmented stream that carries the full
circulation; since E is a positive quadratic form, a step never lowers the
functional.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, root_scalar

from .ansatz import RingParameters, solve_center_z1
from .contour import trig_resample
from .dynamics import (PatchState, composite_norm, conserved_quantities, symmetric_difference_moments,
                       _region_moments)
from .errors import ConstraintError, GeometryError, TopologyError
from .freeboundary import (AndersonMixer, BoundaryCurve, curve_symmetric_difference, level_set_update,
                           measure_circulation, recenter_z)
from .kernel import HalfPlanePoint, PatchField

log = logging.getLogger(__name__)

MASS_RTOL = 1e-9


@dataclass(frozen=True)
class AdmissibleClassSpec:
    eps: float
    kappa: float
    W: float

    def __post_init__(self):
        for name in ("eps", "kappa", "W"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0.0):
                raise ConstraintError(f"{name} must be positive, got {v}")
        if self.eps >= 1.0:
            raise ConstraintError("eps must lie in (0, 1)")

    @property
    def multiplier(self) -> float:
        """W ln(1/eps), the weight of the impulse in the functional."""
        return float(self.W * -np.log(self.eps))

    def params(self, multiplier: float | None = None) -> RingParameters:
        w = self.W if multiplier is None else multiplier / -np.log(self.eps)
        return RingParameters(self.kappa, w, self.eps)


def _check_admissible(patch: PatchState, spec: AdmissibleClassSpec) -> float:
    if patch.eps != spec.eps:
        raise ConstraintError("patch density does not match the admissible class")
    mass = measure_circulation(patch.curve, patch.eps)
    if mass > spec.kappa * (1.0 + MASS_RTOL):
        raise ConstraintError(f"circulation {mass:.12g} exceeds the bound {spec.kappa:.12g}")
    return mass


def augmented_energy(patch: PatchState, spec: AdmissibleClassSpec, multiplier: float | None = None) -> float:
    _check_admissible(patch, spec)
    q = conserved_quantities(patch)
    m = spec.multiplier if multiplier is None else multiplier
    return float(q.energy - m * q.impulse)


# ---------------------------------------------------------------------------
# bathtub rearrangement


@dataclass(frozen=True)
class BathtubUpdate:
    state: PatchState
    mu: float
    multiplier: float


def _radii_for_mass(center_r: float, thetas, base, direction, eps: float, kappa: float, guess: float,
                    half_width: float = 1.0) -> float:
    """t with circulation(base + t direction) = kappa; the circulation is cubic and monotone in t."""
    w = 2.0 * np.pi / base.size
    c = np.cos(thetas)

    def resid(t):
        rad = base + t * direction
        return float(np.sum(center_r * rad**2 / 2.0 + rad**3 * c / 3.0) * w / eps**2) - kappa

    lo, hi = guess - half_width, guess + half_width
    for _ in range(80):
        if resid(lo) * resid(hi) < 0.0:
            return brentq(resid, lo, hi, xtol=1e-15 * max(1.0, abs(guess)), rtol=1e-15, maxiter=200)
        span = hi - lo
        lo, hi = lo - span, hi + span
    raise TopologyError("could not meet the circulation constraint")


def exact_level_set(curve: BoundaryCurve, field: PatchField, eps: float, multiplier: float, kappa: float,
                    guess: np.ndarray, tol: float = 1e-14, max_iter: int = 40):
    """Rays of {psi - multiplier r^2/2 > mu} with mu fixed by the circulation.

    Newton on every ray; after each field evaluation mu is re-chosen so the
    linearised radii carry circulation kappa. Returns (radii, mu).
    """
    c = curve.center
    er, ez = np.cos(curve.thetas), np.sin(curve.thetas)
    rho = np.array(guess, dtype=float)
    scale = float(np.mean(rho))
    mu = float("nan")
    for _ in range(max_iter):
        if np.any(rho <= 0.0) or np.any(c.r + rho * er <= 0.0):
            raise TopologyError("level set left the star-shaped class", state=curve)
        r = c.r + rho * er
        vals = field.evaluate(r, c.z + rho * ez)
        aug = vals.value - 0.5 * multiplier * r * r
        slope = (vals.d_r - multiplier * r) * er + vals.d_z * ez
        if np.any(slope >= 0.0):
            bad = int(np.argmax(slope))
            raise TopologyError("augmented stream does not decrease along a ray", theta=float(curve.thetas[bad]))
        # Newton radius rho + (mu - aug)/slope, linear in mu
        direction = 1.0 / slope
        base = rho - aug / slope
        mu = _radii_for_mass(c.r, curve.thetas, base, direction, eps, kappa, float(np.mean(aug)))
        new = base + mu * direction
        done = np.max(np.abs(new - rho)) < tol * scale
        rho = new
        if done:
            return rho, float(mu)
    raise TopologyError("ray Newton iteration for the level set did not converge", state=curve)


def _level_set(patch: PatchState, spec: AdmissibleClassSpec, multiplier: float, exact: bool,
               field: PatchField | None):
    guess, mu = level_set_update(patch.curve, spec.params(multiplier), kappa=spec.kappa)
    if not exact:
        return guess, mu
    radii, mu = exact_level_set(patch.curve, field, spec.eps, multiplier, spec.kappa, guess.radii)
    return BoundaryCurve(patch.curve.center, patch.curve.thetas, radii), mu


def bathtub_update(patch: PatchState, spec: AdmissibleClassSpec, impulse: float | None = None,
                   exact: bool = False) -> BathtubUpdate:
    """Bathtub step at fixed circulation; with ``impulse`` the multiplier is re-solved so P is held too.

    By default the level set is located on each ray from the value, slope and
    one-sided curvature of the augmented stream at the current boundary
    (error third order in the displacement); ``exact`` polishes it by Newton
    with full field evaluations.
    """
    _check_admissible(patch, spec)
    field = PatchField(patch.contour(), spec.eps) if exact else None
    m0 = spec.multiplier
    if impulse is None:
        curve, mu = _level_set(patch, spec, m0, exact, field)
        m = m0
    else:
        cache = {}

        def gap(m):
            cache[m] = _level_set(patch, spec, m, exact, field)
            return np.pi * cache[m][0].contour().moment_r(3) / spec.eps**2 - impulse

        res = root_scalar(gap, x0=m0, x1=m0 * 1.001, method="secant", xtol=1e-14 * m0, rtol=1e-14)
        if not res.converged:
            raise TopologyError("could not hold the impulse in the bathtub step")
        m = float(res.root)
        curve, mu = cache[m] if m in cache else _level_set(patch, spec, m, exact, field)
    if mu < 0.0:
        warnings.warn("flux constant is negative: the circulation constraint may be inactive", RuntimeWarning)
    moved = recenter_z(curve, 0.0)
    return BathtubUpdate(PatchState(moved, spec.eps, patch.time), float(mu), m)


def bathtub_step(patch: PatchState, spec: AdmissibleClassSpec) -> PatchState:
    return bathtub_update(patch, spec).state


@dataclass
class AscentResult:
    state: PatchState
    rows: list = field(default_factory=list)
    converged: bool = False
    mu: float = float("nan")
    multiplier: float = float("nan")

    @property
    def augmented(self) -> np.ndarray:
        return np.array([row["augmented"] for row in self.rows])


LOG_COLUMNS = ("iter", "energy", "impulse", "augmented", "mu", "mass", "sym_diff_step")


def seed_disc(spec: AdmissibleClassSpec, n: int = 128, center_r: float | None = None) -> PatchState:
    """Disc carrying circulation kappa about (center_r, 0); default centre from the ansatz."""
    cr = solve_center_z1(spec.params()) if center_r is None else float(center_r)
    radius = spec.eps * np.sqrt(spec.kappa / (np.pi * cr))
    return PatchState(BoundaryCurve.circle((cr, 0.0), radius, n), spec.eps)


def maximize(spec: AdmissibleClassSpec, seed: PatchState | None = None, *, mode: str = "mass",
             max_iter: int = 400, accelerate: bool = True, memory: int = 8, n: int = 128,
             gain_tol: float = 1e-12, step_tol: float = 1e-10) -> AscentResult:
    """Bathtub ascent from ``seed`` until both the gain and the step are negligible.

    The functional is nearly flat along radial translation of the core, so a
    small gain alone does not mean the patch has stopped moving.

    mode "mass" holds the circulation with W ln(1/eps) as multiplier; mode
    "impulse" also holds the impulse of the seed and re-solves the multiplier.
    With ``accelerate`` an Anderson extrapolation of the radii (projected back
    to circulation kappa) replaces the next iterate only when it does not
    lower the functional, so the logged values stay non-decreasing.
    """
    if mode not in ("mass", "impulse"):
        raise ValueError(f"unknown mode {mode!r}")
    x = seed_disc(spec, n) if seed is None else seed
    x = PatchState(recenter_z(x.curve, 0.0), x.eps, x.time)
    impulse = conserved_quantities(x).impulse if mode == "impulse" else None
    scale = x.curve.mean_radius()
    mixer = AndersonMixer(memory)
    result = AscentResult(state=x)
    value_x = augmented_energy(x, spec)
    for it in range(1, max_iter + 1):
        upd = bathtub_update(x, spec, impulse)
        z = upd.state
        q = conserved_quantities(z)
        value = float(q.energy - upd.multiplier * q.impulse)
        step = curve_symmetric_difference(x.curve, z.curve)
        result.rows.append(dict(iter=it, energy=q.energy, impulse=q.impulse, augmented=value, mu=upd.mu,
                                mass=q.circulation, sym_diff_step=step))
        result.state, result.mu, result.multiplier = z, upd.mu, upd.multiplier
        log.debug("ascent %d value %.15g step %.3e", it, value, step)
        if step < step_tol * scale**2 and value - value_x < gain_tol * abs(value):
            result.converged = True
            return result
        nxt, value_x = z, value
        if accelerate:
            cand = _extrapolate(mixer, x, z, spec)
            if cand is not None:
                qc = conserved_quantities(cand)
                value_c = float(qc.energy - upd.multiplier * qc.impulse)
                if value_c >= value:
                    nxt, value_x = cand, value_c
                else:
                    mixer.reset()
        x = nxt
    return result


def _extrapolate(mixer: AndersonMixer, x: PatchState, z: PatchState, spec: AdmissibleClassSpec):
    """Anderson candidate from x -> z, moved back onto the circulation constraint by a uniform offset."""
    if x.curve.center != z.curve.center:
        mixer.reset()
        return None
    radii = mixer(x.curve.radii, z.curve.radii)
    ones = np.ones_like(radii)
    try:
        t = _radii_for_mass(z.curve.center.r, z.curve.thetas, radii, ones, spec.eps, spec.kappa, 0.0,
                            half_width=0.01 * float(np.min(radii)))
    except TopologyError:
        return None
    radii = radii + t
    if np.any(radii <= 0.0) or np.any(radii >= z.curve.center.r):
        mixer.reset()
        return None
    return PatchState(BoundaryCurve(z.curve.center, z.curve.thetas, radii), spec.eps, z.time)


# ---------------------------------------------------------------------------
# Steiner symmetrisation


class _Chords:
    """Exact total chord length of a star-shaped patch on vertical lines r = const."""

    def __init__(self, curve: BoundaryCurve, fine: int = 4096):
        c = curve.contour()
        self.n = c.n
        self.cr = np.fft.rfft(c.r) / c.n
        self.cz = np.fft.rfft(c.z) / c.n
        k = np.arange(self.cr.size, dtype=float)
        wk = np.full(k.size, 2.0)
        wk[0] = 1.0
        if c.n % 2 == 0:
            wk[-1] = 1.0
        self.k, self.wk = k, wk
        self.dk = np.where((c.n % 2 == 0) & (k == c.n // 2), 0.0, k)
        self.u = 2.0 * np.pi * np.arange(fine) / fine
        self.rf = trig_resample(c.r, fine)
        self.zf = trig_resample(c.z, fine)
        self.r_min = self._extreme(np.argmin(self.rf))
        self.r_max = self._extreme(np.argmax(self.rf))

    def _eval(self, coef, u, order=0):
        k = self.dk if order % 2 else self.k
        ph = np.exp(1j * np.multiply.outer(u, k))
        return np.real(ph @ (coef * self.wk * (1j * k) ** order))

    def _extreme(self, i0) -> float:
        u = self.u[i0]
        for _ in range(30):
            d1 = self._eval(self.cr, u, 1)
            d2 = self._eval(self.cr, u, 2)
            if d2 == 0.0:
                break
            du = d1 / d2
            u -= du
            if abs(du) < 1e-15:
                break
        return float(self._eval(self.cr, u))

    def crossings(self, r: float) -> np.ndarray:
        g = self.rf - r
        pos = g >= 0.0
        idx = np.flatnonzero(pos != np.roll(pos, -1))
        if idx.size == 0:
            return np.empty(0)
        h = self.u[1] - self.u[0]
        u = self.u[idx] + h * g[idx] / (g[idx] - np.roll(g, -1)[idx])
        for _ in range(30):
            f = self._eval(self.cr, u) - r
            df = self._eval(self.cr, u, 1)
            du = f / df
            u = u - du
            if np.max(np.abs(du)) < 1e-15:
                break
        return np.sort(np.mod(u, 2.0 * np.pi))

    def length(self, r: float) -> float:
        """Measure of {z : (r, z) in A}."""
        if not self.r_min < r < self.r_max:
            return 0.0
        u = self.crossings(r)
        if u.size % 2:
            raise TopologyError(f"odd number of boundary crossings on the slice r = {r}")
        z = self._eval(self.cz, u)
        dr = self._eval(self.cr, u, 1)
        # counter-clockwise: crossings heading to -r are slice tops, to +r bottoms
        total = 0.0
        for zi, di in zip(z, dr):
            total += zi if di < 0.0 else -zi
        return float(total)


def slice_measures(patch: PatchState, rs) -> np.ndarray:
    """Lengths of the vertical slices of the patch at the given radii."""
    ch = _Chords(patch.curve)
    return np.array([ch.length(float(r)) for r in np.atleast_1d(rs)])


def steiner_symmetrize(patch: PatchState, slices: int = 512) -> PatchState:
    """Replace every vertical slice by a centred interval of the same length about z = 0.

    The result is stored on the angular grid of the input about
    (r-centroid, 0); ``slices`` sets the scan used to check that the
    symmetrised set is star-shaped about that centre.
    """
    ch = _Chords(patch.curve)
    cr = patch.curve.centroid()[0]
    n = patch.curve.n
    thetas = 2.0 * np.pi * np.arange(n) / n
    lo_r, hi_r = ch.r_min, ch.r_max
    if not lo_r < cr < hi_r:
        raise GeometryError("centroid is outside the radial extent of the patch")
    half_max = 0.5 * max(ch.length(r) for r in np.linspace(lo_r, hi_r, slices + 2)[1:-1])
    radii = np.empty(n)
    for i, th in enumerate(thetas):
        c, s = np.cos(th), abs(np.sin(th))
        reach = (hi_r - cr) / c if c > 0.0 else ((cr - lo_r) / -c if c < 0.0 else np.inf)
        if s < 1e-14:
            radii[i] = reach
            continue

        def f(rho):
            return rho * s - 0.5 * ch.length(cr + rho * c)

        hi = min(reach, 1.01 * half_max / s)
        radii[i] = brentq(f, 0.0, hi, xtol=1e-15 * (hi_r - lo_r), rtol=1e-15, maxiter=200)
    curve = BoundaryCurve(HalfPlanePoint(float(cr), 0.0), thetas, radii)
    return PatchState(curve, patch.eps, patch.time)


# ---------------------------------------------------------------------------
# energy continuity


def verify_energy_continuity_bound(z1_pair, form: str = "mixed") -> float:
    """|E1 - E2| over the norm product bounding it, for two patches of equal eps.

    form "mixed": (|r^2 (z1+z2)|_1 + |z1+z2|_{1,2}) |r^2 (z1-z2)|_1^(1/2) |z1-z2|_{1,2}^(1/2);
    form "printed": the same with |r^2 (z1-z2)|_1 in both half powers.
    """
    a, b = z1_pair
    if a.eps != b.eps:
        raise GeometryError("the bound compares patches with the same eps")
    eps = a.eps
    m1a, m3a = _region_moments(a.curve)
    m1b, m3b = _region_moments(b.curve)
    d1, d3 = symmetric_difference_moments(a.curve, b.curve)
    if d1 == 0.0:
        return 0.0
    ea = conserved_quantities(a).energy
    eb = conserved_quantities(b).energy
    inter1 = 0.5 * (m1a + m1b - d1)
    sum_l1 = 2.0 * np.pi * (m1a + m1b) / eps**2
    sum_l2 = np.sqrt(2.0 * np.pi * (m1a + m1b + 2.0 * inter1)) / eps**2
    sum_w = 2.0 * np.pi * (m3a + m3b) / eps**2
    diff_w = 2.0 * np.pi * d3 / eps**2
    if form == "mixed":
        second = composite_norm(d1, 0.0, eps)
    elif form == "printed":
        second = diff_w
    else:
        raise ValueError(f"unknown form {form!r}")
    bound = (sum_w + sum_l1 + sum_l2) * np.sqrt(diff_w) * np.sqrt(second)
    return float(abs(ea - eb) / bound)
