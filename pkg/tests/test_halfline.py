"""Kernel formulas, convolution solves and the two-path stability gap.

Reference values below were frozen from an independent high-precision
quadrature (mpmath, 30 digits) of the substituted convolution.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from spdelab import (
    BoundaryData,
    GridMismatch,
    KernelQuadrature,
    SpaceTimeGrid,
    dt_v,
    finite_diff,
    kernel_dy,
    kernel_mass,
    poisson_kernel,
    solve_halfline,
    stability_gap,
)

# P(1, 1) and the wall slope 1 / (2 sqrt(pi))
P_1_1 = 0.2196956447338612
DY_1_0 = 0.28209479177387814

# convolution of h(t) = t^2, frozen at selected (t, y) nodes
V_T2 = {
    (1.0, 1.0): 0.19340789053199532,
    (0.5, 0.3): 0.12888488145385948,
    (1.0, 0.05): 0.9272282242899369,
}
DTV_T2 = {
    (1.0, 1.0): 0.5597177876254156,
    (0.5, 0.3): 0.6041204103517688,
}


def vgrid(cells=20, steps=4):
    return SpaceTimeGrid(dim=1, x1_max=1.0, x1_cells=cells, t_max=1.0, steps=steps)


def t2_data(times):
    return BoundaryData.from_callable(lambda t: t * t, lambda t: 2.0 * t, times)


def node(grid, t, y):
    j = int(round(t / grid.dt))
    i = int(round(y / grid.dx1))
    assert grid.times[j] == pytest.approx(t) and grid.x1_nodes[i] == pytest.approx(y)
    return j, i


# -- kernel point values ----------------------------------------------


def test_kernel_point_value():
    assert poisson_kernel(1.0, 1.0) == pytest.approx(P_1_1, rel=1e-14)


def test_kernel_vanishes_on_the_wall():
    assert poisson_kernel(2.0, 0.0) == 0.0


def test_kernel_rejects_bad_arguments():
    with pytest.raises(ValueError):
        poisson_kernel(0.0, 1.0)
    with pytest.raises(ValueError):
        poisson_kernel(-1.0, 1.0)
    with pytest.raises(ValueError):
        poisson_kernel(1.0, -0.1)
    with pytest.raises(ValueError):
        kernel_dy(0.0, 1.0)


def test_kernel_parabolic_scaling():
    # P(y^2 r, y) = P(r, 1) / y^2
    y, r = 2.0, 0.7
    assert poisson_kernel(y * y * r, y) == pytest.approx(
        poisson_kernel(r, 1.0) / y**2, rel=1e-14
    )


def test_kernel_gaussian_envelope():
    # |P(s, y)| <= s^{-1} exp(-y^2 / (8 s)) with constant one
    s = np.logspace(-3, 2, 40)[:, None]
    y = np.linspace(0.0, 12.0, 50)[None, :]
    p = poisson_kernel(np.broadcast_to(s, (40, 50)), np.broadcast_to(y, (40, 50)))
    bound = np.exp(-(y * y) / (8.0 * s)) / s
    assert np.all(p <= bound * (1.0 + 1e-12))


def test_kernel_dy_wall_value_and_root():
    assert kernel_dy(1.0, 0.0) == pytest.approx(DY_1_0, rel=1e-14)
    for s in (0.3, 1.0, 4.0):
        assert kernel_dy(s, math.sqrt(2.0 * s)) == pytest.approx(0.0, abs=1e-15)


def test_kernel_mass_is_one():
    for y in (0.1, 1.0, 10.0):
        assert abs(kernel_mass(y) - 1.0) <= 1e-8


def test_kernel_mass_raw_route_agrees():
    raw = kernel_mass(1.0, KernelQuadrature(substitution=False, rel_tol=1e-9))
    assert abs(raw - 1.0) <= 1e-8


def test_quadrature_tolerance_window():
    KernelQuadrature(rel_tol=1e-4)  # upper edge allowed
    with pytest.raises(ValueError):
        KernelQuadrature(rel_tol=0.0)
    with pytest.raises(ValueError):
        KernelQuadrature(rel_tol=2e-4)
    with pytest.raises(ValueError):
        KernelQuadrature(max_subdiv=5)


# -- boundary data ----------------------------------------------------


def test_boundary_data_flags_and_scales():
    times = np.linspace(0.0, 1.0, 5)
    d = BoundaryData.from_callable(
        lambda t: t * t, lambda t: 2.0 * t, times, scales=[1.0, -2.0]
    )
    assert d.n_paths == 2 and d.h0_zero and d.hp0_zero and d.analytic
    assert np.allclose(d.h[1], -2.0 * times**2)
    s = BoundaryData.from_samples(times[None, :], np.ones((1, 5)), times)
    assert s.h0_zero and not s.hp0_zero and not s.analytic


def test_boundary_data_consistency_guard():
    times = np.linspace(0.0, 1.0, 9)
    with pytest.raises(ValueError, match="inconsistent"):
        # wrong derivative by a factor two
        BoundaryData.from_callable(lambda t: t * t, lambda t: 4.0 * t, times)
    # rough profiles opt out of the smooth-data bound
    BoundaryData.from_callable(
        lambda t: t**1.25, lambda t: 1.25 * t**0.25, times, smooth=False
    )


def test_boundary_data_shape_validation():
    times = np.linspace(0.0, 1.0, 4)
    with pytest.raises(ValueError):
        BoundaryData.from_samples(np.zeros((2, 4)), np.zeros((2, 3)), times)


# -- half-line solves -------------------------------------------------


def test_solve_frozen_values_analytic():
    g = vgrid()
    v = solve_halfline(t2_data(g.times), g)
    for (t, y), ref in V_T2.items():
        j, i = node(g, t, y)
        assert v.values[0, j, i] == pytest.approx(ref, rel=1e-9)


def test_solve_wall_and_initial_rows_exact():
    g = vgrid(cells=6)
    data = t2_data(g.times)
    v = solve_halfline(data, g)
    assert np.array_equal(v.values[0, :, 0], data.h[0])
    assert np.all(v.values[:, 0, 1:] == 0.0)


def test_solve_zero_data_gives_zero_field():
    g = vgrid(cells=6)
    data = BoundaryData.from_samples(
        np.zeros((3, g.steps + 1)), np.zeros((3, g.steps + 1)), g.times
    )
    v = solve_halfline(data, g)
    assert np.all(v.values == 0.0)
    assert v.n_paths == 3


def test_solve_sampled_matches_analytic():
    # a cubic spline through t^2 samples reproduces the profile exactly,
    # so the sampled route must land on the analytic values
    g = vgrid()
    va = solve_halfline(t2_data(g.times), g)
    data = BoundaryData.from_samples(
        (g.times**2)[None, :], (2.0 * g.times)[None, :], g.times
    )
    vs = solve_halfline(data, g, KernelQuadrature(rel_tol=1e-9))
    assert np.allclose(vs.values, va.values, rtol=0.0, atol=5e-8)


def test_solve_requires_compatible_grid_and_zero_start():
    g = vgrid(cells=4)
    with pytest.raises(GridMismatch):
        solve_halfline(t2_data(g.times[:-1]), g)
    bad = BoundaryData.from_samples(
        np.ones((1, g.steps + 1)), np.zeros((1, g.steps + 1)), g.times
    )
    with pytest.raises(ValueError, match="h\\(0\\)"):
        solve_halfline(bad, g)


def test_dt_v_frozen_values():
    g = vgrid()
    d = dt_v(t2_data(g.times), g)
    for (t, y), ref in DTV_T2.items():
        j, i = node(g, t, y)
        assert d.values[0, j, i] == pytest.approx(ref, rel=1e-9)
    # wall row carries h' exactly
    assert np.allclose(d.values[0, :, 0], 2.0 * g.times, atol=0.0)


def test_dt_v_requires_flat_start():
    g = vgrid(cells=4)
    lin = BoundaryData.from_callable(lambda t: t, lambda t: 1.0, g.times)
    with pytest.raises(ValueError, match="h'\\(0\\)"):
        dt_v(lin, g)


def test_time_derivative_equals_second_space_derivative():
    # the convolution identity d_t v = D11 v, checked against a centered
    # second difference away from the wall
    g = SpaceTimeGrid(dim=1, x1_max=1.5, x1_cells=30, t_max=1.0, steps=4)
    data = t2_data(g.times)
    d = dt_v(data, g)
    v = solve_halfline(data, g)
    d11 = finite_diff(v, (2,))
    gap = np.abs(d.values - d11.values)[0, 1:, 2:-2]
    assert float(np.max(gap)) < 2e-3  # second-order in dx = 0.05


def test_two_quadrature_routes_agree():
    g = vgrid(cells=5, steps=2)
    data = t2_data(g.times)
    sub = solve_halfline(data, g, KernelQuadrature(substitution=True))
    raw = solve_halfline(data, g, KernelQuadrature(substitution=False, rel_tol=1e-9))
    assert np.allclose(sub.values, raw.values, atol=2e-8)


def test_worker_threads_do_not_change_values():
    g = vgrid(cells=8)
    data = BoundaryData.from_samples(
        np.vstack([g.times**2, np.sin(g.times) - g.times]),
        np.vstack([2.0 * g.times, np.cos(g.times) - 1.0]),
        g.times,
    )
    one = solve_halfline(data, g, workers=1)
    two = solve_halfline(data, g, workers=2)
    assert np.array_equal(one.values, two.values)


# -- stability gap ----------------------------------------------------


def test_stability_gap_identical_data_is_flat():
    g = vgrid(cells=6)
    d = t2_data(g.times)
    rep = stability_gap(d, d, g)
    assert rep.lhs == 0.0 and rep.rhs == 0.0 and rep.passed


def test_stability_gap_deterministic_pair():
    g = vgrid(cells=10)
    d1 = t2_data(g.times)
    d2 = BoundaryData.from_callable(lambda t: 0.5 * t * t, lambda t: t, g.times)
    rep = stability_gap(d1, d2, g, gamma=2.0)
    # data gap h1' - h2' = t peaks at T = 1, so rhs = 1
    assert rep.rhs == pytest.approx(1.0)
    assert rep.lhs <= 1.05 * rep.rhs
    assert rep.passed
    assert rep.ratio == rep.lhs / rep.rhs


def test_stability_gap_validates_inputs():
    g = vgrid(cells=4)
    d = t2_data(g.times)
    with pytest.raises(ValueError, match="gamma"):
        stability_gap(d, d, g, gamma=1.0)
    other = BoundaryData.from_callable(
        lambda t: t * t, lambda t: 2.0 * t, g.times, scales=[1.0, 2.0]
    )
    with pytest.raises(ValueError, match="paths"):
        stability_gap(d, other, g)
