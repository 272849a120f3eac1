"""Discrete Hölder machinery: sup norms, quotient seminorms, the ratio."""

from __future__ import annotations

import math

import numpy as np
import pytest

from spdelab import (
    FieldEnsemble,
    NormSpec,
    SpaceTimeGrid,
    parabolic_seminorm,
    schauder_ratio,
    space_seminorm,
    sup_norm,
    time_seminorm,
    trace_parabolic_norm,
)
from spdelab.norms import report_rows

SPEC = NormSpec(alpha=0.5)


def grid1(cells=8, steps=4, x1_max=1.0, t_max=1.0):
    return SpaceTimeGrid(dim=1, x1_max=x1_max, x1_cells=cells, t_max=t_max, steps=steps)


def static(grid, profile, paths=1):
    vals = np.broadcast_to(
        profile(grid.x1_nodes)[None, None, :], (paths, grid.steps + 1, grid.n_x1)
    ).copy()
    return FieldEnsemble(vals, grid)


def test_spec_validation():
    with pytest.raises(ValueError):
        NormSpec(alpha=0.0)
    with pytest.raises(ValueError):
        NormSpec(alpha=1.0)
    with pytest.raises(ValueError):
        NormSpec(alpha=0.5, gamma=1.5)
    with pytest.raises(ValueError):
        NormSpec(alpha=0.5, pair_policy="sparse")


def test_constant_field_has_zero_seminorms():
    f = static(grid1(), lambda x: np.full_like(x, 3.5))
    assert sup_norm(f, SPEC).value == 3.5
    assert space_seminorm(f, SPEC).value == 0.0
    assert parabolic_seminorm(f, SPEC).value == 0.0


def test_sup_norm_scans_derivative_orders():
    f = static(grid1(), lambda x: x * x)
    m0 = sup_norm(f, SPEC, m=0)
    m1 = sup_norm(f, SPEC, m=1)
    assert m0.value == pytest.approx(1.0) and m0.beta == (0,)
    # D1 x^2 = 2x beats the field itself; the closure is exact here
    assert m1.value == pytest.approx(2.0, abs=1e-12) and m1.beta == (1,)


def test_linear_profile_space_seminorm():
    # quotient |x - y|^{1-alpha} peaks at the full width, here 1
    f = static(grid1(cells=10), lambda x: x)
    r = space_seminorm(f, SPEC)
    assert r.value == pytest.approx(1.0, rel=1e-12)
    assert r.kind == "space_seminorm[exhaustive]"
    assert r.pairs > 0


def test_seminorm_absolute_homogeneity():
    g = grid1(cells=6, steps=3)
    vals = np.random.default_rng(3).normal(size=(2, g.steps + 1, g.n_x1))
    f = FieldEnsemble(vals, g)
    cf = FieldEnsemble(-4.0 * vals, g)
    for fn in (space_seminorm, parabolic_seminorm):
        a = fn(f, SPEC).value
        b = fn(cf, SPEC).value
        assert b == pytest.approx(4.0 * a, rel=1e-12)


def test_parabolic_dominates_space_seminorm():
    g = grid1(cells=6, steps=3)
    vals = np.random.default_rng(9).normal(size=(1, g.steps + 1, g.n_x1))
    f = FieldEnsemble(vals, g)
    # equal-time pairs appear in both enumerations with equal denominators
    assert parabolic_seminorm(f, SPEC).value >= space_seminorm(f, SPEC).value - 1e-15


def test_dyadic_policy_is_a_lower_bound():
    g = grid1(cells=7, steps=5)
    vals = np.random.default_rng(1).normal(size=(1, g.steps + 1, g.n_x1))
    f = FieldEnsemble(vals, g)
    full = parabolic_seminorm(f, NormSpec(alpha=0.3, pair_policy="exhaustive"))
    dyad = parabolic_seminorm(f, NormSpec(alpha=0.3, pair_policy="dyadic"))
    assert dyad.kind.endswith("[dyadic]")
    assert dyad.value <= full.value + 1e-15
    assert dyad.pairs < full.pairs


def test_parabolic_scaling_law():
    # same nodal values on a grid dilated by lambda in space and
    # lambda^2 in time divide every denominator by lambda^alpha
    lam = 2.0
    for alpha in (0.25, 0.5, 0.75):
        spec = NormSpec(alpha=alpha)
        g = grid1(cells=6, steps=4, x1_max=1.0, t_max=1.0)
        gs = grid1(cells=6, steps=4, x1_max=lam * 1.0, t_max=lam * lam * 1.0)
        vals = np.random.default_rng(7).normal(size=(1, g.steps + 1, g.n_x1))
        a = parabolic_seminorm(FieldEnsemble(vals, g), spec).value
        b = parabolic_seminorm(FieldEnsemble(vals.copy(), gs), spec).value
        assert a / b == pytest.approx(lam**alpha, rel=1e-12)


def test_time_seminorm_power_profile():
    for alpha in (0.25, 0.5, 0.75):
        times = np.linspace(0.0, 1.0, 33)
        samples = (1.0 + alpha / 2.0) * times ** (alpha / 2.0)
        got = time_seminorm(samples[None, :], times, alpha / 2.0)
        # the quotient is maximized against s = 0 where it is exact
        assert got == pytest.approx(1.0 + alpha / 2.0, rel=1e-14)


def test_moment_seminorm_gaussian_amplitude():
    # u = xi * x with xi ~ N(0,1): the second moment restores |x - y|
    g = grid1(cells=8)
    n = 4000
    xi = np.random.default_rng(21).normal(size=(n, 1, 1))
    vals = xi * g.x1_nodes[None, None, :] * np.ones((1, g.steps + 1, 1))
    f = FieldEnsemble(vals, g)
    r = space_seminorm(f, NormSpec(alpha=0.5, gamma=2.0))
    assert r.value == pytest.approx(1.0, rel=0.05)


def test_trace_norm_reduces_to_time_quotient():
    g = grid1(cells=4, steps=8)
    wall = np.sin(2.0 * np.pi * g.times)
    vals = np.zeros((1, g.steps + 1, g.n_x1))
    vals[:, :, 0] = wall
    sup, semi = trace_parabolic_norm(FieldEnsemble(vals, g), SPEC)
    assert sup == pytest.approx(np.max(np.abs(wall)))
    expect = time_seminorm(wall[None, :], g.times, SPEC.alpha / 2.0)
    assert semi.value == pytest.approx(expect, rel=1e-12)


def test_schauder_ratio_zero_data_sentinel():
    g = grid1(cells=4, steps=2)
    z = FieldEnsemble(np.zeros((1, g.steps + 1, g.n_x1)), g)
    rep = schauder_ratio(z, z, None, SPEC)
    assert rep.sentinel == "0/0"
    assert math.isnan(rep.ratio)
    assert rep.lhs == 0.0 and rep.rhs == 0.0


def test_schauder_ratio_parts_sum_to_sides():
    g = grid1(cells=5, steps=3)
    rng = np.random.default_rng(2)
    u = FieldEnsemble(rng.normal(size=(2, g.steps + 1, g.n_x1)), g)
    f = FieldEnsemble(rng.normal(size=(2, g.steps + 1, g.n_x1)), g)
    gg = FieldEnsemble(rng.normal(size=(2, g.steps + 1, g.n_x1, 2)), g, n_modes=2)
    rep = schauder_ratio(u, f, gg, SPEC)
    p = rep.parts
    assert rep.lhs == pytest.approx(p["u_sup_m2"] + p["u_parabolic_m2"])
    rhs = (
        p["f_sup"]
        + p["f_space_seminorm"]
        + p["f_trace_sup"]
        + p["f_trace_seminorm"]
        + p["g_sup_m1"]
        + p["g_space_seminorm_m1"]
    )
    assert rep.rhs == pytest.approx(rhs)
    assert rep.ratio == pytest.approx(rep.lhs / rep.rhs)
    assert rep.sentinel == ""


def test_report_rows_carry_the_canonical_columns():
    g = grid1(cells=4, steps=2)
    f = static(g, lambda x: x)
    rows = report_rows([sup_norm(f, SPEC), space_seminorm(f, SPEC)], "u", "g0", 42)
    assert len(rows) == 2
    for row in rows:
        assert set(row) == {
            "field_id",
            "m",
            "alpha",
            "gamma",
            "kind",
            "value",
            "argmax_pair",
            "pairs_evaluated",
            "grid_id",
            "seed",
        }
    assert rows[0]["field_id"] == "u" and rows[0]["seed"] == 42
