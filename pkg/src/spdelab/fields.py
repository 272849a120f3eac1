"""Space-time grids and path-ensemble fields on the truncated half-space.

The computational domain is x1 in [0, x1_max] (node x1 = 0 always on the
grid, Dirichlet wall) with an optional periodic tangential direction x'
of period xp_max, and times 0 = t_0 < ... < t_steps = T.  A field
ensemble stores one value per (path, time node, space node), path-major,
so a single path's trajectory is contiguous in memory.

Mirrored grids (x1_min = -x1_max) carry odd/even extensions; they are
produced by the extension module, never by solvers directly.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "SpaceTimeGrid",
    "FieldEnsemble",
    "GridMismatch",
    "ParityViolation",
    "finite_diff",
    "restrict_to_boundary",
    "linear_combine",
    "save_field",
    "load_field",
]


class GridMismatch(ValueError):
    """Two objects live on incompatible grids."""


class ParityViolation(ValueError):
    """A field violates the symmetry its extension requires."""


@dataclass(frozen=True)
class SpaceTimeGrid:
    """Uniform tensor grid on [x1_min, x1_max] x (periodic x') x [0, T].

    dim is the number of space dimensions (1 or 2).  x1 is the normal
    direction; for dim == 2 the tangential direction is periodic with
    xp_cells distinct nodes (no duplicated endpoint).  periodic_x1
    switches the normal direction to a whole-line surrogate with
    x1_cells distinct nodes and no Dirichlet wall; it exists for mode
    oracles, not for boundary studies.
    """

    dim: int
    x1_max: float
    x1_cells: int
    t_max: float
    steps: int
    xp_max: float = 0.0
    xp_cells: int = 0
    x1_min: float = 0.0
    periodic_x1: bool = False

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if self.x1_max <= self.x1_min:
            raise ValueError("x1_max must exceed x1_min")
        if self.x1_cells < 2 or self.steps < 1:
            raise ValueError("need x1_cells >= 2 and steps >= 1")
        if self.t_max <= 0:
            raise ValueError("t_max must be positive")
        if self.dim == 2 and (self.xp_cells < 4 or self.xp_max <= 0):
            raise ValueError("dim == 2 needs xp_cells >= 4 and xp_max > 0")
        if self.periodic_x1 and self.x1_min != 0.0:
            raise ValueError("periodic_x1 grids are not mirrored")
        if not self.periodic_x1 and not (self.x1_min == 0.0 or self.x1_min == -self.x1_max):
            raise ValueError("x1_min must be 0 or -x1_max")

    # -- spacings -----------------------------------------------------
    @property
    def dx1(self) -> float:
        return (self.x1_max - self.x1_min) / self.x1_cells

    @property
    def dxp(self) -> float:
        return self.xp_max / self.xp_cells if self.dim == 2 else 0.0

    @property
    def dt(self) -> float:
        return self.t_max / self.steps

    # -- node arrays --------------------------------------------------
    @property
    def n_x1(self) -> int:
        # periodic: distinct nodes only; wall grids include both ends
        return self.x1_cells if self.periodic_x1 else self.x1_cells + 1

    @property
    def n_xp(self) -> int:
        return self.xp_cells if self.dim == 2 else 0

    @property
    def x1_nodes(self) -> np.ndarray:
        return self.x1_min + self.dx1 * np.arange(self.n_x1)

    @property
    def xp_nodes(self) -> np.ndarray:
        return self.dxp * np.arange(self.xp_cells) if self.dim == 2 else np.zeros(0)

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.steps + 1)

    @property
    def space_shape(self) -> tuple:
        return (self.n_x1,) if self.dim == 1 else (self.n_x1, self.n_xp)

    @property
    def wall_index(self) -> int:
        """Index of the x1 = 0 node."""
        if self.periodic_x1:
            raise GridMismatch("periodic_x1 grid has no wall")
        return 0 if self.x1_min == 0.0 else round(-self.x1_min / self.dx1)

    def refine(self, space_factor=2, time_factor=4) -> "SpaceTimeGrid":
        return replace(
            self,
            x1_cells=self.x1_cells * space_factor,
            xp_cells=self.xp_cells * space_factor,
            steps=self.steps * time_factor,
        )

    def compatible(self, other: "SpaceTimeGrid") -> bool:
        return self == other


@dataclass
class FieldEnsemble:
    """Values of shape (paths, steps+1, *space_shape[, modes]).

    n_modes == 0 means a plain scalar field; n_modes >= 1 appends a
    trailing mode axis (noise forcings g^k live there).  Deterministic
    data uses a single path; consumers broadcast over the path axis.
    """

    values: np.ndarray
    grid: SpaceTimeGrid
    n_modes: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        expect = (self.grid.steps + 1,) + self.grid.space_shape
        if self.n_modes:
            expect = expect + (self.n_modes,)
        if self.values.ndim != 1 + len(expect) or self.values.shape[1:] != expect:
            raise GridMismatch(
                f"value shape {self.values.shape} does not match (paths,)+{expect}"
            )

    @property
    def n_paths(self) -> int:
        return self.values.shape[0]

    @property
    def space_axes(self) -> tuple:
        return tuple(range(2, 2 + self.grid.dim))

    def zeros_like(self) -> "FieldEnsemble":
        return FieldEnsemble(np.zeros_like(self.values), self.grid, self.n_modes)


def _axis_spacing(grid: SpaceTimeGrid, axis_dim: int) -> float:
    return grid.dx1 if axis_dim == 0 else grid.dxp


def _axis_periodic(grid: SpaceTimeGrid, axis_dim: int) -> bool:
    return grid.periodic_x1 if axis_dim == 0 else True


def _diff1(values, h, axis, periodic):
    if periodic:
        return (np.roll(values, -1, axis) - np.roll(values, 1, axis)) / (2 * h)
    n = values.shape[axis]
    if n < 3:
        raise GridMismatch("first derivative needs >= 3 nodes along the axis")
    out = np.empty_like(values)
    sl = lambda i: tuple(slice(None) if a != axis else i for a in range(values.ndim))
    out[sl(slice(1, -1))] = (values[sl(slice(2, None))] - values[sl(slice(0, -2))]) / (2 * h)
    # one-sided second-order closures at the ends
    out[sl(0)] = (-3 * values[sl(0)] + 4 * values[sl(1)] - values[sl(2)]) / (2 * h)
    out[sl(-1)] = (3 * values[sl(-1)] - 4 * values[sl(-2)] + values[sl(-3)]) / (2 * h)
    return out


def _diff2(values, h, axis, periodic):
    if periodic:
        return (np.roll(values, -1, axis) - 2 * values + np.roll(values, 1, axis)) / (h * h)
    n = values.shape[axis]
    if n < 4:
        raise GridMismatch("second derivative needs >= 4 nodes along the axis")
    out = np.empty_like(values)
    sl = lambda i: tuple(slice(None) if a != axis else i for a in range(values.ndim))
    out[sl(slice(1, -1))] = (
        values[sl(slice(2, None))] - 2 * values[sl(slice(1, -1))] + values[sl(slice(0, -2))]
    ) / (h * h)
    out[sl(0)] = (
        2 * values[sl(0)] - 5 * values[sl(1)] + 4 * values[sl(2)] - values[sl(3)]
    ) / (h * h)
    out[sl(-1)] = (
        2 * values[sl(-1)] - 5 * values[sl(-2)] + 4 * values[sl(-3)] - values[sl(-4)]
    ) / (h * h)
    return out


def finite_diff(f: FieldEnsemble, beta) -> FieldEnsemble:
    """Spatial derivative D^beta of a field, second-order stencils.

    beta is a multi-index over the space axes, |beta| <= 2.  Interior
    nodes use centered differences; the x1 wall nodes use one-sided
    second-order closures so the stencil never leaves the closed
    half-space; the tangential direction wraps periodically.  Mixed
    derivatives compose the one-dimensional operators (normal first,
    then tangential, matching centered-tangential-of-one-sided-normal
    at near-wall nodes).
    """
    beta = tuple(int(k) for k in beta)
    if len(beta) != f.grid.dim:
        raise ValueError(f"beta {beta} has wrong length for dim {f.grid.dim}")
    if any(k < 0 for k in beta) or sum(beta) > 2:
        raise ValueError(f"multi-index {beta} outside |beta| <= 2")
    out = f.values
    for d, order in enumerate(beta):
        if order == 0:
            continue
        axis = 2 + d
        h = _axis_spacing(f.grid, d)
        periodic = _axis_periodic(f.grid, d)
        if order == 1:
            out = _diff1(out, h, axis, periodic)
        elif order == 2:
            out = _diff2(out, h, axis, periodic)
        else:
            out = _diff1(out, h, axis, periodic)
            out = _diff1(out, h, axis, periodic)
    return FieldEnsemble(out, f.grid, f.n_modes, dict(f.meta, derivative=beta))


def restrict_to_boundary(f: FieldEnsemble) -> np.ndarray:
    """Trace on the x1 = 0 wall: shape (paths, steps+1[, n_xp][, modes])."""
    idx = f.grid.wall_index
    return f.values[:, :, idx, ...]


def linear_combine(coeffs, fields) -> FieldEnsemble:
    """Pointwise sum(c_k * field_k) on a shared grid."""
    if len(coeffs) != len(fields) or not fields:
        raise ValueError("need equally many coefficients and fields, at least one")
    first = fields[0]
    for g in fields[1:]:
        if not first.grid.compatible(g.grid) or g.n_modes != first.n_modes:
            raise GridMismatch("linear_combine requires identical grids and mode counts")
        if g.values.shape != first.values.shape:
            raise GridMismatch("linear_combine requires identical ensemble shapes")
    acc = coeffs[0] * fields[0].values
    for c, g in zip(coeffs[1:], fields[1:]):
        acc = acc + c * g.values
    return FieldEnsemble(acc, first.grid, first.n_modes)


# -- persistence ------------------------------------------------------
#
# Flat binary layout, little-endian throughout:
#   magic(8s) version(u32) dim(u32) n_modes(u32) periodic_x1(u32)
#   x1_cells(u64) xp_cells(u64) steps(u64) ndim(u32) shape(u64 * ndim)
#   x1_min(f64) x1_max(f64) xp_max(f64) t_max(f64)
# followed by the raw value array in C order, float64.  A JSON sidecar
# (path + ".json") carries the free-form meta dict.

_MAGIC = b"SPDLFLD1"
_VERSION = 1


def save_field(f: FieldEnsemble, path) -> None:
    path = str(path)
    shape = f.values.shape
    header = struct.pack(
        "<8sIIII",
        _MAGIC,
        _VERSION,
        f.grid.dim,
        f.n_modes,
        1 if f.grid.periodic_x1 else 0,
    )
    header += struct.pack("<QQQ", f.grid.x1_cells, f.grid.xp_cells, f.grid.steps)
    header += struct.pack("<I", len(shape))
    header += struct.pack(f"<{len(shape)}Q", *shape)
    header += struct.pack(
        "<dddd", f.grid.x1_min, f.grid.x1_max, f.grid.xp_max, f.grid.t_max
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())
    with open(path + ".json", "w") as fh:
        json.dump({"meta": f.meta, "shape": list(shape)}, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_field(path) -> FieldEnsemble:
    path = str(path)
    with open(path, "rb") as fh:
        magic, version, dim, n_modes, per_x1 = struct.unpack("<8sIIII", fh.read(24))
        if magic != _MAGIC:
            raise ValueError(f"{path}: not a field file (magic {magic!r})")
        if version != _VERSION:
            raise ValueError(f"{path}: unsupported version {version}")
        x1_cells, xp_cells, steps = struct.unpack("<QQQ", fh.read(24))
        (ndim,) = struct.unpack("<I", fh.read(4))
        shape = struct.unpack(f"<{ndim}Q", fh.read(8 * ndim))
        x1_min, x1_max, xp_max, t_max = struct.unpack("<dddd", fh.read(32))
        values = np.frombuffer(fh.read(), dtype="<f8").reshape(shape).copy()
    grid = SpaceTimeGrid(
        dim=dim,
        x1_max=x1_max,
        x1_cells=x1_cells,
        t_max=t_max,
        steps=steps,
        xp_max=xp_max,
        xp_cells=xp_cells,
        x1_min=x1_min,
        periodic_x1=bool(per_x1),
    )
    meta = {}
    try:
        with open(path + ".json") as fh:
            meta = json.load(fh).get("meta", {})
    except FileNotFoundError:
        pass
    return FieldEnsemble(values, grid, n_modes, meta)
