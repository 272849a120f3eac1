"""Odd/even reflection across the wall and the shear reformulation.

Reflections build a mirrored grid on [-x1_max, x1_max] by concatenating
a flipped (and for odd parity, negated) copy of the interior slab onto
the original, so the parity identity holds bit-exactly by construction.
Odd extension demands a vanishing wall trace; even extension does not.

The shear reformulation trades the mixed-derivative coupling for
forcings that vanish on the wall: with F(t, x1, x') := f'(t, 0, x' + x1)
(tangential forcing sampled on the wall, sheared along the diagonal),
the tangential component f' - F has zero wall trace, while the normal
component absorbs F and the tangential-gradient drift.  The shear is an
exact nodal map when the two grid spacings coincide.
"""

from __future__ import annotations

import numpy as np

from .fields import (
    FieldEnsemble,
    GridMismatch,
    ParityViolation,
    SpaceTimeGrid,
    finite_diff,
)

__all__ = ["odd_extend", "even_extend", "translated_forcing"]

_TRACE_TOL = 1e-12


def _mirror_grid(grid: SpaceTimeGrid) -> SpaceTimeGrid:
    if grid.x1_min != 0.0 or grid.periodic_x1:
        raise GridMismatch("can only mirror a half-space grid with the wall at 0")
    return SpaceTimeGrid(
        dim=grid.dim,
        x1_max=grid.x1_max,
        x1_cells=2 * grid.x1_cells,
        t_max=grid.t_max,
        steps=grid.steps,
        xp_max=grid.xp_max,
        xp_cells=grid.xp_cells,
        x1_min=-grid.x1_max,
    )


def _extend(f: FieldEnsemble, sign: int) -> FieldEnsemble:
    flipped = sign * np.flip(f.values[:, :, 1:, ...], axis=2)
    values = np.concatenate([flipped, f.values], axis=2)
    return FieldEnsemble(values, _mirror_grid(f.grid), f.n_modes, dict(f.meta, parity=sign))


def odd_extend(f: FieldEnsemble) -> FieldEnsemble:
    """Odd reflection; the wall trace must vanish to 1e-12 of field scale."""
    scale = float(np.max(np.abs(f.values))) if f.values.size else 0.0
    trace = float(np.max(np.abs(f.values[:, :, 0, ...]))) if f.values.size else 0.0
    if trace > _TRACE_TOL * max(scale, 1e-300):
        raise ParityViolation(
            f"odd extension needs a vanishing wall trace: max |trace| = {trace:.3e} "
            f"against field scale {scale:.3e}"
        )
    return _extend(f, -1)


def even_extend(f: FieldEnsemble) -> FieldEnsemble:
    """Even reflection across the wall; no trace condition."""
    return _extend(f, +1)


def translated_forcing(f_normal, f_tangential, a_cross, u):
    """Assemble the sheared forcing pair (F, f_tilde) on a dim-2 grid.

    Parameters
    ----------
    f_normal, f_tangential:
        Components f^1 and f^2 of the drift forcing.
    a_cross:
        The off-diagonal diffusion entry paired with the tangential
        gradient: scalar, or an array sampled at the grid times.
    u:
        Solution field whose tangential derivative feeds the normal
        component.

    Returns
    -------
    (F, f_tilde_normal, f_tilde_tangential):
        F is the wall-sampled shear of f_tangential.  The tangential
        residue f_tangential - F has an exactly zero wall trace; the
        normal component gains 2 * a_cross * D2 u + F.
    """
    grid = f_tangential.grid
    if grid.dim != 2:
        raise GridMismatch("the shear reformulation needs a tangential direction")
    if not (grid.dx1 == grid.dxp):
        raise GridMismatch(
            f"shear needs equal spacings for an exact nodal map; "
            f"dx1 = {grid.dx1!r}, dxp = {grid.dxp!r}"
        )
    for other in (f_normal, u):
        if not grid.compatible(other.grid):
            raise GridMismatch("forcing components and u must share one grid")

    wall = f_tangential.values[:, :, 0, :]  # (paths, times, nxp)
    n_x1, n_xp = grid.n_x1, grid.n_xp
    shear = np.empty_like(f_tangential.values)
    for j in range(n_x1):
        shear[:, :, j, :] = np.roll(wall, -j, axis=2)
    F = FieldEnsemble(shear, grid, meta={"kind": "sheared-wall-forcing"})

    a_vals = np.asarray(a_cross, dtype=float)
    if a_vals.ndim == 0:
        a_vals = np.full(grid.steps + 1, float(a_vals))
    if a_vals.shape != (grid.steps + 1,):
        raise ValueError("a_cross must be scalar or sampled at the grid times")
    d2u = finite_diff(u, (0, 1)).values
    tilde_normal = f_normal.values + 2.0 * a_vals[None, :, None, None] * d2u + F.values
    tilde_tangential = f_tangential.values - F.values

    return (
        F,
        FieldEnsemble(tilde_normal, grid, meta={"kind": "normal-forcing-sheared"}),
        FieldEnsemble(tilde_tangential, grid, meta={"kind": "tangential-forcing-sheared"}),
    )
