import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vring.ansatz import (CoreAnsatz, RingParameters, U_field, boundary_first_order, center_equation,
                          center_equation_slope, flux_constant, rankine_V, regular_correction, rim_value,
                          solve_center_z1, solve_core_parameters)
from vring.errors import DomainError, GeometryError

KAPPA = 4 * np.pi


def test_parameters_validated():
    with pytest.raises(DomainError):
        RingParameters(-1.0, 1.0, 0.05)
    with pytest.raises(DomainError):
        RingParameters(KAPPA, 0.0, 0.05)
    with pytest.raises(DomainError):
        RingParameters(KAPPA, 1.0, 1.5)


def test_flux_constant_examples():
    p = RingParameters(KAPPA, 1.0, np.exp(-1.0))
    assert flux_constant(p, 1.0) == pytest.approx(1.5, rel=1e-15)
    p = RingParameters(KAPPA, 1.0, 0.05)
    z1 = p.r_star
    expected = z1 * p.log_eps * (KAPPA / (2 * np.pi) - 0.5 * p.W * z1)
    assert flux_constant(p, z1) == pytest.approx(expected, rel=1e-14)


def test_rankine_rim_and_centre():
    p = RingParameters(KAPPA, 1.0, 0.05)
    core = solve_core_parameters(p, 1.0)
    rim = core.a * p.log_eps / (2 * np.pi)
    assert rim_value(core, p) == pytest.approx(rim, rel=1e-15)
    assert rankine_V((1.0 + core.s, 0.0), core, p) == pytest.approx(rim, rel=1e-14)
    assert rankine_V((1.0, core.s), core, p) == pytest.approx(rim, rel=1e-14)
    assert rankine_V((1.0, 0.0), core, p) == pytest.approx(rim + core.s**2 / (4 * p.eps**2), rel=1e-14)


def test_rankine_derivative_continuous_across_rim():
    p = RingParameters(KAPPA, 1.0, 0.05)
    core = solve_core_parameters(p, 1.0)
    h = 1e-7 * core.s
    d = core.s
    inside = (rankine_V((1.0 + d, 0.0), core, p) - rankine_V((1.0 + d - h, 0.0), core, p)) / h
    outside = (rankine_V((1.0 + d + h, 0.0), core, p) - rankine_V((1.0 + d, 0.0), core, p)) / h
    assert abs(inside - outside) < 1e-5 * core.n_grad


def test_core_parameters_satisfy_both_equations():
    p = RingParameters(KAPPA, 1.0, 0.05)
    z1 = solve_center_z1(p)
    core = solve_core_parameters(p, z1)
    # gradient match fixes s from a
    lhs = core.s**2 * np.log(1 / core.s)
    assert lhs == pytest.approx(core.a * p.log_eps * p.eps**2 / (np.pi * z1**2), rel=1e-12)
    # rim equation: V - V_mirror + H - (W/2) z1^2 ln(1/eps) = mu at the core centre, up to the core curvature
    hz = regular_correction((z1, 0.0), z1, core.s, p.eps)
    rim = core.a * p.log_eps / (2 * np.pi) * (1 - np.log(2 * z1) / np.log(core.s))
    assert rim + hz == pytest.approx(z1 * KAPPA * p.log_eps / (2 * np.pi), rel=1e-9)
    assert core.n_grad == pytest.approx(core.s * z1**2 / (2 * p.eps**2))


def test_core_rejects_thick_regime():
    with pytest.raises(DomainError):
        solve_core_parameters(RingParameters(KAPPA, 1.0, 0.35), 1.0)
    with pytest.raises(GeometryError):
        solve_core_parameters(RingParameters(KAPPA, 1.0, 0.25), 0.05)


def test_core_area_consistency_with_circulation():
    gaps = []
    for eps in (0.05, 0.0125, 0.003125):
        p = RingParameters(KAPPA, 1.0, eps)
        z1 = solve_center_z1(p)
        core = solve_core_parameters(p, z1)
        gaps.append(abs(np.pi * core.s**2 * z1 / eps**2 - KAPPA) * np.log(1 / eps))
    assert max(gaps) < 3 * KAPPA


def test_center_tends_to_r_star():
    gaps = [abs(solve_center_z1(RingParameters(KAPPA, 1.0, e)) - 1.0) for e in (1e-2, 1e-4, 1e-8, 1e-16)]
    assert all(a > b for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 0.1


def test_center_slope_over_log_tends_to_w():
    ratios = []
    for eps in (0.1, 0.0125, 1e-4, 1e-6, 1e-8):
        p = RingParameters(KAPPA, 1.0, eps)
        x = solve_center_z1(p)
        h = 1e-6 * x
        fd = (center_equation(x + h, p) - center_equation(x - h, p)) / (2 * h)
        assert fd == pytest.approx(center_equation_slope(x, p), rel=1e-6)
        ratios.append(fd / (p.W * p.log_eps))
    # the gap closes like 1/ln(1/eps): about 0.7 at desk scale, inside 20% from eps = 1e-4 on
    assert all(a < b for a, b in zip(ratios, ratios[1:]))
    assert all(0.8 < r < 1.2 for r in ratios[2:])


def test_regular_correction_routes_agree_at_centre():
    p = RingParameters(KAPPA, 1.0, 0.05)
    core = solve_core_parameters(p, 1.0)
    contour = regular_correction((1.0, 0.0), 1.0, core.s, p.eps)
    gauss = regular_correction((1.0, 0.0), 1.0, core.s, p.eps, method="gauss")
    assert gauss == pytest.approx(contour, rel=1e-12)
    gaps = []
    for eps in (0.05, 0.0125):
        core = solve_core_parameters(RingParameters(KAPPA, 1.0, eps), 1.0)
        exact = regular_correction((1.0, 0.0), 1.0, core.s, eps)
        gaps.append(abs(regular_correction((1.0, 0.0), 1.0, core.s, eps, method="centered") / exact - 1))
    assert gaps[1] < gaps[0] < 0.05


@settings(max_examples=20, deadline=None)
@given(st.floats(0.3, 2.5), st.floats(0.01, 1.0))
def test_u_field_even_in_z(r, z):
    p = RingParameters(KAPPA, 1.0, 0.05)
    core = _core()
    assert U_field((r, z), core, p) == pytest.approx(U_field((r, -z), core, p), rel=1e-10, abs=1e-10)


_CACHE = {}


def _core():
    if "c" not in _CACHE:
        _CACHE["c"] = solve_core_parameters(RingParameters(KAPPA, 1.0, 0.05), 1.0)
    return _CACHE["c"]


def test_boundary_first_order_vanishes_at_quarter_turn():
    p = RingParameters(KAPPA, 1.0, 0.05)
    core = _core()
    assert abs(boundary_first_order(np.pi / 2, core, p)) < 1e-15 * abs(boundary_first_order(0.0, core, p)) + 1e-300
    t = np.linspace(0, 2 * np.pi, 9)
    np.testing.assert_allclose(boundary_first_order(t, core, p), np.cos(t) * boundary_first_order(0.0, core, p),
                               atol=1e-15)


def test_core_ansatz_is_a_value_type():
    a = CoreAnsatz(1.0, 0.1, 2.0, 3.0, 4.0)
    assert a == CoreAnsatz(1.0, 0.1, 2.0, 3.0, 4.0)
