"""Odd/even reflection across the wall and the shear change of variables."""

from __future__ import annotations

import numpy as np
import pytest

from spdelab import (
    FieldEnsemble,
    GridMismatch,
    ParityViolation,
    SpaceTimeGrid,
    even_extend,
    finite_diff,
    odd_extend,
    translated_forcing,
)


def halfgrid(cells=8, x1_max=1.0):
    return SpaceTimeGrid(dim=1, x1_max=x1_max, x1_cells=cells, t_max=1.0, steps=2)


def sample(grid, fn):
    vals = np.broadcast_to(
        fn(grid.x1_nodes), (1, grid.steps + 1, grid.n_x1)
    ).copy()
    return FieldEnsemble(vals, grid)


def test_odd_extension_of_identity():
    v = odd_extend(sample(halfgrid(), lambda x: x))
    g = v.grid
    assert g.x1_min == -1.0 and g.n_x1 == 17
    j = int(np.argmin(np.abs(g.x1_nodes + 0.5)))
    assert g.x1_nodes[j] == pytest.approx(-0.5)
    assert v.values[0, 0, j] == pytest.approx(-0.5)
    assert v.grid.wall_index == 8
    assert np.all(v.values[:, :, v.grid.wall_index] == 0.0)


def test_odd_extension_matches_global_sine():
    g = halfgrid(cells=16, x1_max=np.pi)
    v = odd_extend(sample(g, np.sin))
    # sin is globally odd, so the extension reproduces it on the mirror
    assert np.allclose(v.values[0, 0], np.sin(v.grid.x1_nodes), atol=1e-14)


def test_odd_extension_flips_even_profile():
    # x^2 has zero trace, so the extension is legal; the left half is -x^2
    v = odd_extend(sample(halfgrid(), lambda x: x * x))
    nodes = v.grid.x1_nodes
    left = nodes < 0
    assert np.allclose(v.values[0, 0, left], -nodes[left] ** 2, atol=1e-14)


def test_odd_extension_rejects_nonzero_trace():
    with pytest.raises(ParityViolation):
        odd_extend(sample(halfgrid(), lambda x: np.ones_like(x)))


def test_even_extension_is_symmetric():
    f = sample(halfgrid(), lambda x: np.cos(x) + 0.25 * x)
    v = even_extend(f)
    vals = v.values[0, 0]
    assert np.allclose(vals, vals[::-1], atol=0.0)
    # the right half is the original data
    w = v.grid.wall_index
    assert np.array_equal(vals[w:], f.values[0, 0])


def test_extension_preserves_modes_and_paths():
    g = halfgrid(cells=4)
    vals = np.zeros((3, g.steps + 1, g.n_x1, 2))
    vals[..., 0] = g.x1_nodes
    vals[..., 1] = np.sin(g.x1_nodes)
    f = FieldEnsemble(vals, g, n_modes=2)
    v = odd_extend(f)
    assert v.n_modes == 2 and v.n_paths == 3
    assert np.allclose(v.values[1, 1, :, 0], v.grid.x1_nodes, atol=1e-14)


# -- shear substitution -----------------------------------------------


def sheargrid(cells=16):
    # equal spacings in both directions, as the substitution requires
    return SpaceTimeGrid(
        dim=2,
        x1_max=1.0,
        x1_cells=cells,
        t_max=0.5,
        steps=2,
        xp_max=1.0,
        xp_cells=cells,
    )


def shear_fields(grid, tang_fn):
    shape = (1, grid.steps + 1, grid.n_x1, grid.n_xp)
    f_n = FieldEnsemble(np.zeros(shape), grid)
    tang = np.broadcast_to(tang_fn(grid.xp_nodes)[None, None, None, :], shape).copy()
    u = FieldEnsemble(np.zeros(shape), grid)
    return f_n, FieldEnsemble(tang, grid), u


def test_translated_forcing_shifts_wall_rows():
    g = sheargrid()
    wave = lambda xp: np.sin(2.0 * np.pi * xp)
    f_n, f_t, u = shear_fields(g, wave)
    cap_f, tilde_n, tilde_t = translated_forcing(f_n, f_t, 0.0, u)
    # with a x'-only tangential profile the shifted field is g(x' + x1)
    # nodally exact because dx1 == dxp and the profile is periodic
    x1 = g.x1_nodes[:, None]
    xp = g.xp_nodes[None, :]
    assert np.allclose(cap_f.values[0, 0], wave((xp + x1) % 1.0), atol=1e-12)
    # the corrected tangential forcing vanishes on the wall row
    assert np.all(tilde_t.values[:, :, 0, :] == 0.0)


def test_translated_forcing_balances_the_pair():
    g = sheargrid(cells=8)
    f_n, f_t, u = shear_fields(g, lambda xp: np.cos(2.0 * np.pi * xp))
    cap_f, tilde_n, tilde_t = translated_forcing(f_n, f_t, 0.0, u)
    # what leaves the tangential slot enters the normal slot
    assert np.array_equal(tilde_n.values, f_n.values + cap_f.values)
    assert np.array_equal(tilde_t.values, f_t.values - cap_f.values)


def test_translated_field_rides_the_characteristic():
    g = sheargrid()
    f_n, f_t, u = shear_fields(g, lambda xp: np.sin(2.0 * np.pi * xp))
    cap_f, _, _ = translated_forcing(f_n, f_t, 0.0, u)
    d1 = finite_diff(cap_f, (1, 0)).values
    d2 = finite_diff(cap_f, (0, 1)).values
    # F(x1, x') = g(x' + x1) satisfies D1 F = D2 F; interior nodes where
    # both stencils are centered agree to rounding
    assert np.allclose(d1[:, :, 1:-1, :], d2[:, :, 1:-1, :], atol=1e-10)


def test_translated_forcing_requires_matched_spacings():
    g = SpaceTimeGrid(
        dim=2, x1_max=2.0, x1_cells=16, t_max=0.5, steps=2, xp_max=1.0, xp_cells=16
    )
    shape = (1, g.steps + 1, g.n_x1, g.n_xp)
    f = FieldEnsemble(np.zeros(shape), g)
    with pytest.raises(GridMismatch):
        translated_forcing(f, f, 0.0, f)


def test_translated_forcing_requires_tangential_direction():
    g = halfgrid()
    f = sample(g, lambda x: x)
    with pytest.raises(GridMismatch):
        translated_forcing(f, f, 0.0, f)
