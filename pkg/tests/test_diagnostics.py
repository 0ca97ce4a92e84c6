import numpy as np
import pytest

from vring.ansatz import RingParameters, solve_center_z1, solve_core_parameters
from vring.diagnostics import (DiagnosticsReport, ansatz_stream, core_symmetric_difference, cross_section_sigma, diagnose,
                               fit_refined_core, fitted_order, kelvin_hicks_residual, kelvin_hicks_residual_max_point,
                               limit_profile, max_point, normalized_spread, pohozaev_check, pohozaev_terms,
                               probe_points, psi_split, residual_star_norm, star_weight, thin_disc_radius,
                               weighted_sup)
from vring.errors import GeometryError
from vring.freeboundary import BoundaryCurve, SteadyRingSolution, measure_circulation

KAPPA = 4 * np.pi


def test_sigma_of_circle_and_ellipse():
    assert cross_section_sigma(BoundaryCurve.circle((1.0, 0.0), 0.3, 64)) == pytest.approx(0.3, rel=1e-14)
    t = 2 * np.pi * np.arange(256) / 256
    ellipse = 1.0 / np.sqrt((np.cos(t) / 2.0) ** 2 + np.sin(t) ** 2)
    assert cross_section_sigma(BoundaryCurve.from_radii((5.0, 0.0), ellipse)) == pytest.approx(2.0, rel=1e-10)


def _ansatz_disc_solution():
    p = RingParameters(KAPPA, 1.0, 0.05)
    x = solve_center_z1(p)
    core = solve_core_parameters(p, x)
    s0 = p.eps * np.sqrt(KAPPA / (np.pi * x))
    curve = BoundaryCurve.circle((x, 0.0), s0, 128)
    return SteadyRingSolution(params=p, core=core, curve=curve, kappa_measured=measure_circulation(curve, p.eps),
                              mu_used=core.mu, iterations=0, final_update=0.0)


def test_kelvin_hicks_vanishes_on_the_ansatz_disc():
    sol = _ansatz_disc_solution()
    assert sol.kappa_measured == pytest.approx(KAPPA, rel=1e-14)
    assert abs(kelvin_hicks_residual(sol, center="core")) < 1e-12


def test_thin_disc_radius(ring):
    z1 = ring.core.z1
    assert thin_disc_radius(ring, z1) == pytest.approx(ring.eps * np.sqrt(KAPPA / (np.pi * z1)))


def test_refined_core_is_critical_at_the_max_point(ring):
    core = fit_refined_core(ring)
    p = max_point(ring)
    assert abs(p - core.z1) < 0.5 * core.s
    h = 1e-4 * core.s
    slope = (ansatz_stream(np.array([[p + h, 0.0]]), core, ring.params)
             - ansatz_stream(np.array([[p - h, 0.0]]), core, ring.params))[0] / (2 * h)
    assert abs(slope) < 1e-6 * core.n_grad
    assert core.mu == ring.mu_used


def test_max_point_is_a_maximum(ring):
    p = max_point(ring)
    f = ring.field()
    h = 1e-3 * ring.core.s
    vals = f.evaluate(np.array([p - h, p, p + h]), np.zeros(3)).value
    assert vals[1] >= vals[0] and vals[1] >= vals[2]


def test_kelvin_hicks_residual_is_small(ring):
    res = kelvin_hicks_residual(ring)
    eps = ring.eps
    assert abs(res) < eps**2 * np.log(1 / eps)
    assert abs(kelvin_hicks_residual_max_point(ring)) < 1.0


def test_split_sums_to_stream(ring):
    rng = np.random.default_rng(7)
    z1 = fit_refined_core(ring).z1
    pts = np.stack([z1 + rng.uniform(-0.5, 0.5, 20), rng.uniform(-0.5, 0.5, 20)], -1)
    psi1, psi2 = psi_split(ring, pts)
    psi = ring.field().evaluate(pts[:, 0], pts[:, 1]).value
    np.testing.assert_allclose(psi1 + psi2, psi, rtol=1e-8)


def test_limit_profile_shape():
    assert limit_profile(0.0) == 0.25
    assert limit_profile(1.0) == 0.0
    assert limit_profile(np.e) == pytest.approx(-0.5)


def test_star_norm_of_ansatz_against_itself_is_zero(ring):
    x = probe_points(1.0, 0.05)
    assert weighted_sup(np.zeros(len(x)), x, 1.0) == 0.0
    assert np.all(star_weight(x, 1.0) > 0.0)


def test_probe_grids_nest():
    coarse = probe_points(1.0, 0.05)
    fine = probe_points(1.0, 0.05, density=2)
    fine_set = {tuple(np.round(p, 12)) for p in fine}
    assert all(tuple(np.round(p, 12)) in fine_set for p in coarse)


def test_residual_star_norm_finite(ring):
    v = residual_star_norm(ring)
    assert np.isfinite(v) and v > 0.0


def test_pohozaev_identity_and_delta_independence(ring):
    z1, s = ring.core.z1, ring.core.s
    delta = min(10 * s, z1 / 4)
    a = pohozaev_terms(ring, delta)
    b = pohozaev_terms(ring, 2 * delta)
    assert a.gap < 1e-6 and b.gap < 1e-6
    assert a.lhs - a.rhs == pytest.approx(b.lhs - b.rhs, abs=1e-6 * abs(a.rhs))
    lhs, rhs = pohozaev_check(ring, delta)
    assert (lhs, rhs) == (a.lhs, a.rhs)


def test_pohozaev_closed_forms_close(ring):
    t = pohozaev_terms(ring, min(10 * ring.core.s, ring.core.z1 / 4))
    assert t.lhs == pytest.approx(t.lhs_closed, rel=1e-2)
    assert t.psi2_term == pytest.approx(t.psi2_closed, rel=1e-2)
    assert t.w_term == pytest.approx(t.w_closed, rel=1e-2)


def test_pohozaev_rejects_small_circle(ring):
    with pytest.raises(GeometryError):
        pohozaev_terms(ring, 0.5 * ring.core.s)


def test_core_symmetric_difference_small(ring):
    assert core_symmetric_difference(ring) < 1e-2 * np.pi * ring.core.s**2


def test_diagnose_report(coarse_ring):
    rep = diagnose(coarse_ring)
    assert isinstance(rep, DiagnosticsReport)
    assert rep.poho_gap < 1e-6
    d = rep.to_dict()
    assert d["poho_gap"] == rep.poho_gap
    with pytest.raises(ValueError):
        DiagnosticsReport(**{**{k: v for k, v in d.items() if k != "poho_gap"}, "sigma": -1.0})


def test_fitted_order_and_spread():
    eps = np.array([0.1, 0.05, 0.025])
    assert fitted_order(eps, 3 * eps**2) == pytest.approx(2.0, abs=1e-12)
    assert normalized_spread([1.0, -2.0, 1.5]) == 2.0
