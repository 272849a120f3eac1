"""Semi-implicit ensemble solver for the half-space model problem.

The model equation couples an implicit diffusion drift with explicit
gradient noise:

    du = (a^{ij}(t) D_ij u + b^i D_i u + c u + f) dt
       + (sigma^{ik}(t) D_i u + nu^k u + g^k) dw^k,
    u = 0 on the wall x1 = 0 (and at the truncation plane x1 = x1_max),
    u(0) = 0,

stepped by backward-Euler diffusion (direct banded/sparse solves, the
implicit matrix sampled at step midpoints for second-order consistency
of the deterministic part) and explicit Euler-Maruyama noise evaluated
at the left time point.  All paths advance through identical linear
algebra, so results are independent of how paths are blocked across
workers.

Coefficient admissibility is the two-sided parabolicity condition
kappa |xi|^2 + sigma sigma^T <= 2 a <= K |xi|^2; the boundary theory
additionally needs the normal noise row sigma^{1k} to vanish, which
`check_compatibility` tests and the dichotomy study deliberately breaks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import solve_banded
from scipy.sparse.linalg import splu

from .extension import odd_extend
from .fields import FieldEnsemble, GridMismatch, SpaceTimeGrid, finite_diff
from .rng import WienerBatch

__all__ = [
    "ModelCoefficients",
    "Forcing",
    "ParabolicityReport",
    "CompatibilityReport",
    "ModelError",
    "BlowUpError",
    "check_parabolicity",
    "check_compatibility",
    "laplace_coefficients",
    "interpolate_coefficients",
    "solve_model_halfspace",
    "solve_periodic_line",
    "solve_additive_heat",
    "continuity_step",
]

DEFAULT_CFL = 0.25


class ModelError(ValueError):
    """Coefficients, grid or noise violate a solver precondition."""


class BlowUpError(RuntimeError):
    """A trajectory left the finite range; names the first bad index."""

    def __init__(self, path, step):
        super().__init__(f"solution blew up at path {path}, step {step}")
        self.path = path
        self.step = step


def _as_fn(value, shape, name):
    """Wrap a constant array (or scalar) as a function of time."""
    if callable(value):
        probe = np.asarray(value(0.0), dtype=float)
        if probe.shape != shape:
            raise ModelError(f"{name}(t) must have shape {shape}, got {probe.shape}")
        return value, False
    arr = np.broadcast_to(np.asarray(value, dtype=float), shape).copy()
    return (lambda t, _a=arr: _a), True


@dataclass(frozen=True)
class ModelCoefficients:
    """Time-dependent model coefficients with admissibility bounds.

    a(t): (dim, dim) symmetric diffusion; sigma(t): (dim, n_modes)
    gradient-noise matrix; lower-order b(t): (dim,), c(t): scalar,
    nu(t): (n_modes,) are accepted and default to zero (the model
    studies never switch them on).  kappa and bound are the recorded
    two-sided ellipticity constants.
    """

    dim: int
    n_modes: int
    a_fn: object
    sigma_fn: object
    b_fn: object
    c_fn: object
    nu_fn: object
    kappa: float
    bound: float
    constant: bool = True

    @classmethod
    def make(cls, dim, a, sigma, *, n_modes=1, b=0.0, c=0.0, nu=0.0, kappa=1.0, bound=4.0):
        a_fn, a_const = _as_fn(a, (dim, dim), "a")
        sg_fn, s_const = _as_fn(sigma, (dim, n_modes), "sigma")
        b_fn, b_const = _as_fn(b, (dim,), "b")
        c_fn, c_const = _as_fn(c, (), "c")
        nu_fn, n_const = _as_fn(nu, (n_modes,), "nu")
        if not np.allclose(a_fn(0.0), np.asarray(a_fn(0.0)).T, rtol=0, atol=1e-14):
            raise ModelError("a must be symmetric")
        if kappa <= 0 or bound <= 0:
            raise ModelError("kappa and bound must be positive")
        return cls(
            dim=dim,
            n_modes=n_modes,
            a_fn=a_fn,
            sigma_fn=sg_fn,
            b_fn=b_fn,
            c_fn=c_fn,
            nu_fn=nu_fn,
            kappa=kappa,
            bound=bound,
            constant=a_const and s_const and b_const and c_const and n_const,
        )

    def a_at(self, t):
        return np.asarray(self.a_fn(t), dtype=float)

    def sigma_at(self, t):
        return np.asarray(self.sigma_fn(t), dtype=float)

    def b_at(self, t):
        return np.asarray(self.b_fn(t), dtype=float)

    def c_at(self, t):
        return float(self.c_fn(t))

    def nu_at(self, t):
        return np.asarray(self.nu_fn(t), dtype=float)

    @property
    def has_lower_order(self) -> bool:
        return bool(
            np.any(self.b_at(0.0)) or self.c_at(0.0) or np.any(self.nu_at(0.0))
        ) or not self.constant


def laplace_coefficients(dim, n_modes=1) -> ModelCoefficients:
    """Pure heat operator: a = I, no noise coefficients."""
    return ModelCoefficients.make(
        dim, np.eye(dim), np.zeros((dim, n_modes)), n_modes=n_modes, kappa=1.0, bound=2.5
    )


@dataclass
class ParabolicityReport:
    passed: bool
    lower_margin: float
    upper_margin: float
    worst_time: float


@dataclass
class CompatibilityReport:
    passed: bool
    max_normal_component: float


def check_parabolicity(coeffs: ModelCoefficients, times=(0.0,)) -> ParabolicityReport:
    """Eigenvalue margins of kappa I + sigma sigma^T <= 2a <= K I."""
    lower = np.inf
    upper = np.inf
    worst = float(times[0])
    for t in times:
        a2 = 2.0 * coeffs.a_at(t)
        s = coeffs.sigma_at(t)
        lo = float(np.min(np.linalg.eigvalsh(a2 - s @ s.T - coeffs.kappa * np.eye(coeffs.dim))))
        up = float(np.min(np.linalg.eigvalsh(coeffs.bound * np.eye(coeffs.dim) - a2)))
        if min(lo, up) < min(lower, upper):
            worst = float(t)
        lower = min(lower, lo)
        upper = min(upper, up)
    return ParabolicityReport(
        passed=bool(lower >= -1e-12 and upper >= -1e-12),
        lower_margin=lower,
        upper_margin=upper,
        worst_time=worst,
    )


def check_compatibility(coeffs: ModelCoefficients, times=(0.0,)) -> CompatibilityReport:
    """The boundary theory needs the normal noise row to vanish."""
    worst = 0.0
    for t in times:
        worst = max(worst, float(np.max(np.abs(coeffs.sigma_at(t)[0, :]))))
    return CompatibilityReport(passed=worst == 0.0, max_normal_component=worst)


@dataclass
class Forcing:
    """Drift forcing f and noise forcing g (modes on the trailing axis)."""

    f: FieldEnsemble | None = None
    g: FieldEnsemble | None = None

    def validate(self, grid, n_modes):
        for name, fe in (("f", self.f), ("g", self.g)):
            if fe is None:
                continue
            if not grid.compatible(fe.grid):
                raise GridMismatch(f"forcing {name} lives on a different grid")
        if self.f is not None and self.f.n_modes:
            raise ModelError("f must not carry a mode axis")
        if self.g is not None and self.g.n_modes != n_modes:
            raise ModelError(
                f"g carries {self.g.n_modes} modes, coefficients have {n_modes}"
            )


# -- discrete operators ----------------------------------------------


def _d1_wall(u, dx):
    """Centered normal derivative, valid on interior nodes (walls zeroed)."""
    out = np.zeros_like(u)
    out[:, 1:-1, ...] = (u[:, 2:, ...] - u[:, :-2, ...]) / (2.0 * dx)
    return out


def _d1_periodic(u, dx, axis):
    return (np.roll(u, -1, axis) - np.roll(u, 1, axis)) / (2.0 * dx)


def _sp_dirichlet_d2(n, h):
    main = np.full(n, -2.0) / h**2
    off = np.ones(n - 1) / h**2
    return sp.diags([off, main, off], [-1, 0, 1], format="csr")


def _sp_dirichlet_d1(n, h):
    off = np.ones(n - 1) / (2.0 * h)
    return sp.diags([-off, off], [-1, 1], format="csr")


def _sp_periodic_d2(n, h):
    m = sp.lil_matrix((n, n))
    for i in range(n):
        m[i, i] = -2.0
        m[i, (i - 1) % n] = 1.0
        m[i, (i + 1) % n] = 1.0
    return (m / h**2).tocsr()


def _sp_periodic_d1(n, h):
    m = sp.lil_matrix((n, n))
    for i in range(n):
        m[i, (i + 1) % n] = 1.0
        m[i, (i - 1) % n] = -1.0
    return (m / (2.0 * h)).tocsr()


def _implicit_matrix(coeffs, grid, t_mid, dt):
    """I - dt * a(t):D^2 over the unknown nodes, ready for a direct solve."""
    a = coeffs.a_at(t_mid)
    if grid.dim == 1:
        if grid.periodic_x1:
            n = grid.n_x1
            m = sp.identity(n, format="csr") - dt * a[0, 0] * _sp_periodic_d2(n, grid.dx1)
            return splu(m.tocsc())
        n = grid.n_x1 - 2
        r = dt * a[0, 0] / grid.dx1**2
        ab = np.zeros((3, n))
        ab[0, 1:] = -r
        ab[1, :] = 1.0 + 2.0 * r
        ab[2, :-1] = -r
        return ab
    n1 = grid.n_x1 - 2
    n2 = grid.n_xp
    eye1 = sp.identity(n1, format="csr")
    eye2 = sp.identity(n2, format="csr")
    op = a[0, 0] * sp.kron(_sp_dirichlet_d2(n1, grid.dx1), eye2)
    op = op + a[1, 1] * sp.kron(eye1, _sp_periodic_d2(n2, grid.dxp))
    if a[0, 1] != 0.0:
        op = op + 2.0 * a[0, 1] * sp.kron(
            _sp_dirichlet_d1(n1, grid.dx1), _sp_periodic_d1(n2, grid.dxp)
        )
    m = sp.identity(n1 * n2, format="csr") - dt * op
    return splu(m.tocsc())


def _interior_solve(matrix, rhs_interior, grid):
    """Direct solve over the unknown nodes; rhs (paths, *interior shape)."""
    paths = rhs_interior.shape[0]
    if grid.dim == 1 and not grid.periodic_x1:
        sol = solve_banded((1, 1), matrix, rhs_interior.reshape(paths, -1).T)
        return sol.T.reshape(rhs_interior.shape)
    sol = matrix.solve(rhs_interior.reshape(paths, -1).T)
    return sol.T.reshape(rhs_interior.shape)


def _cfl_check(coeffs, grid, c_cfl):
    norms = [
        float(np.max(np.abs(np.linalg.eigvalsh(coeffs.a_at(t))))) for t in grid.times
    ]
    dx = grid.dx1 if grid.dim == 1 else min(grid.dx1, grid.dxp)
    limit = c_cfl * dx * dx / (2.0 * max(norms))
    if grid.dt > limit * (1.0 + 1e-12):
        raise ModelError(
            f"time step {grid.dt:.3e} violates the noise stability restriction "
            f"{limit:.3e} (c_cfl = {c_cfl})"
        )


def _slot(values, j, paths):
    """Time slice j of a forcing array, broadcast over paths."""
    v = values[:, j, ...]
    if v.shape[0] == paths:
        return v
    if v.shape[0] == 1:
        return np.broadcast_to(v, (paths,) + v.shape[1:])
    raise ModelError(f"forcing has {v.shape[0]} paths, noise has {paths}")


def _step_loop(coeffs, forcing, grid, noise, u0, store, observer):
    paths = noise.n_paths
    dt = grid.dt
    interior = (
        (slice(None), slice(None))
        if grid.periodic_x1
        else (slice(None), slice(1, -1))
    )
    u = np.zeros((paths,) + grid.space_shape) if u0 is None else u0.copy()
    if u.shape != (paths,) + grid.space_shape:
        raise ModelError("u0 has the wrong shape")
    out = None
    if store == "full":
        out = np.zeros((paths, grid.steps + 1) + grid.space_shape)
        out[:, 0] = u
    f_vals = forcing.f.values if forcing.f is not None else None
    g_vals = forcing.g.values if forcing.g is not None else None
    cached = _implicit_matrix(coeffs, grid, 0.5 * dt, dt) if coeffs.constant else None
    lower_order = coeffs.has_lower_order
    for j in range(grid.steps):
        t_j = grid.times[j]
        sig = coeffs.sigma_at(t_j)
        nu = coeffs.nu_at(t_j)
        dw = noise.increments[:, j, :]
        # explicit part: forcing, lower-order drift, Euler-Maruyama noise
        expl = u.copy()
        if f_vals is not None:
            expl += dt * _slot(f_vals, j, paths)
        if lower_order:
            b = coeffs.b_at(t_j)
            cc = coeffs.c_at(t_j)
            if np.any(b) or cc:
                d1 = _d1_wall(u, grid.dx1) if not grid.periodic_x1 else _d1_periodic(u, grid.dx1, 1)
                expl += dt * (b[0] * d1 + cc * u)
                if grid.dim == 2 and b[1]:
                    expl += dt * b[1] * _d1_periodic(u, grid.dxp, 2)
        need_grad = np.any(sig)
        if need_grad:
            du1 = (
                _d1_periodic(u, grid.dx1, 1)
                if grid.periodic_x1
                else _d1_wall(u, grid.dx1)
            )
            du2 = _d1_periodic(u, grid.dxp, 2) if grid.dim == 2 else None
        for k in range(coeffs.n_modes):
            term = None
            if need_grad and sig[0, k]:
                term = sig[0, k] * du1
            if grid.dim == 2 and need_grad and sig[1, k]:
                term = sig[1, k] * du2 if term is None else term + sig[1, k] * du2
            if nu[k]:
                term = nu[k] * u if term is None else term + nu[k] * u
            if g_vals is not None:
                gk = _slot(g_vals[..., k], j, paths)
                term = gk if term is None else term + gk
            if term is not None:
                expl += term * dw[:, k].reshape((paths,) + (1,) * grid.dim)
        # detect divergence before the direct solver rejects the array
        if not np.all(np.isfinite(expl)):
            bad = np.argwhere(~np.isfinite(expl))
            raise BlowUpError(path=int(bad[0][0]), step=j + 1)
        matrix = cached
        if matrix is None:
            matrix = _implicit_matrix(coeffs, grid, t_j + 0.5 * dt, dt)
        u_new = np.zeros_like(u)
        u_new[interior] = _interior_solve(matrix, expl[interior], grid)
        if not np.all(np.isfinite(u_new)):
            bad = np.argwhere(~np.isfinite(u_new))
            raise BlowUpError(path=int(bad[0][0]), step=j + 1)
        u = u_new
        if out is not None:
            out[:, j + 1] = u
        if observer is not None:
            observer(j + 1, grid.times[j + 1], u)
    if store == "full":
        return out
    return u


def solve_model_halfspace(
    coeffs: ModelCoefficients,
    forcing: Forcing,
    grid: SpaceTimeGrid,
    noise: WienerBatch,
    *,
    c_cfl: float = DEFAULT_CFL,
    u0: np.ndarray | None = None,
    store: str = "full",
    observer=None,
):
    """Run the semi-implicit scheme on the Dirichlet half-space grid.

    Returns a FieldEnsemble for store="full"; store="final" returns the
    terminal state array (paths, *space) for studies that accumulate
    statistics through an observer instead of materializing trajectories.
    """
    if grid.periodic_x1:
        raise ModelError("use solve_periodic_line for the surrogate grid")
    if grid.dim != coeffs.dim:
        raise ModelError(f"grid dim {grid.dim} != coefficient dim {coeffs.dim}")
    if noise.n_steps != grid.steps or noise.n_modes != coeffs.n_modes:
        raise ModelError("noise batch does not match grid steps / mode count")
    if abs(noise.dt - grid.dt) > 1e-12 * grid.dt:
        raise ModelError("noise increment variance does not match the grid step")
    if store not in ("full", "final"):
        raise ValueError(f"unknown store mode {store!r}")
    rep = check_parabolicity(coeffs, grid.times)
    if not rep.passed:
        raise ModelError(
            f"coefficients are not admissible: margins {rep.lower_margin:.3e}, "
            f"{rep.upper_margin:.3e} at t = {rep.worst_time}"
        )
    forcing.validate(grid, coeffs.n_modes)
    _cfl_check(coeffs, grid, c_cfl)
    result = _step_loop(coeffs, forcing, grid, noise, u0, store, observer)
    if store == "final":
        return result
    return FieldEnsemble(
        result,
        grid,
        meta={
            "kind": "halfspace-solution",
            "scheme": "imex-midpoint-implicit",
            "c_cfl": c_cfl,
            "gaussian_method": noise.gaussian_method,
        },
    )


def solve_periodic_line(coeffs, forcing, grid, noise, *, u0=None, c_cfl=DEFAULT_CFL, store="final"):
    """Whole-line surrogate: dim-1 periodic grid, no Dirichlet wall.

    Exists for spectral oracles (single-mode moment decay); the wall
    studies never use it.
    """
    if not (grid.periodic_x1 and grid.dim == 1):
        raise ModelError("solve_periodic_line needs a periodic dim-1 grid")
    if noise.n_steps != grid.steps or noise.n_modes != coeffs.n_modes:
        raise ModelError("noise batch does not match grid steps / mode count")
    rep = check_parabolicity(coeffs, grid.times)
    if not rep.passed:
        raise ModelError("coefficients are not admissible")
    forcing.validate(grid, coeffs.n_modes)
    _cfl_check(coeffs, grid, c_cfl)
    result = _step_loop(coeffs, forcing, grid, noise, u0, store, None)
    if store == "final":
        return result
    return FieldEnsemble(result, grid, meta={"kind": "periodic-surrogate"})


def solve_additive_heat(g: FieldEnsemble, grid, noise, *, route="direct"):
    """Additive-noise heat solve dU = Lap U dt + g^k dw^k, U = 0 on walls.

    route="direct" solves on the half-space grid; route="odd" solves on
    the mirrored line after odd extension (valid because g vanishes on
    the wall) and restricts back; route="both" returns the pair plus
    their maximal discrepancy, which refines away at O(dx^2 + dt).
    """
    if route not in ("direct", "odd", "both"):
        raise ValueError(f"unknown route {route!r}")
    coeffs = laplace_coefficients(grid.dim, n_modes=g.n_modes)
    direct = None
    if route in ("direct", "both"):
        direct = solve_model_halfspace(coeffs, Forcing(g=g), grid, noise)
        direct.meta["kind"] = "additive-heat-direct"
    if route == "direct":
        return direct
    g_odd = odd_extend(g)
    mirrored = solve_model_halfspace(coeffs, Forcing(g=g_odd), g_odd.grid, noise)
    wall = g_odd.grid.wall_index
    restricted = FieldEnsemble(
        mirrored.values[:, :, wall:, ...].copy(),
        grid,
        meta={"kind": "additive-heat-odd-extension"},
    )
    if route == "odd":
        return restricted
    gap = float(np.max(np.abs(direct.values - restricted.values)))
    return direct, restricted, gap


def interpolate_coefficients(coeffs: ModelCoefficients, s: float) -> ModelCoefficients:
    """Operator family L_s = s L + (1-s) Laplacian, noise scaled by s."""
    eye = np.eye(coeffs.dim)

    def a_fn(t, _s=s):
        return _s * coeffs.a_at(t) + (1.0 - _s) * eye

    def sigma_fn(t, _s=s):
        return _s * coeffs.sigma_at(t)

    def b_fn(t, _s=s):
        return _s * coeffs.b_at(t)

    def c_fn(t, _s=s):
        return _s * coeffs.c_at(t)

    def nu_fn(t, _s=s):
        return _s * coeffs.nu_at(t)

    return ModelCoefficients(
        dim=coeffs.dim,
        n_modes=coeffs.n_modes,
        a_fn=a_fn,
        sigma_fn=sigma_fn,
        b_fn=b_fn,
        c_fn=c_fn,
        nu_fn=nu_fn,
        # convexity with the Laplacian keeps the family uniformly admissible
        kappa=min(coeffs.kappa, 2.0),
        bound=max(coeffs.bound, 2.0),
        constant=coeffs.constant,
    )


def _tmul(samples, values, grid, n_modes):
    """Multiply a per-time coefficient array onto field values."""
    shape = (1, grid.steps + 1) + (1,) * grid.dim + ((1,) if n_modes else ())
    return samples.reshape(shape) * values


def continuity_step(
    coeffs: ModelCoefficients,
    s: float,
    s0: float,
    v: FieldEnsemble,
    forcing: Forcing,
    grid: SpaceTimeGrid,
    noise: WienerBatch,
    **solver_kw,
):
    """One step of the continuity iteration toward the operator at s.

    Solves the s0 problem with the operator increment applied to the
    previous iterate v as extra forcing:

        f_eff = f + (s - s0) [ (a - I):D^2 v + b . D v + c v ],
        g_eff = g + (s - s0) [ sigma . D v + nu v ].

    At s = s0 the increment vanishes and the output is the plain s0
    solve regardless of v.
    """
    if not grid.compatible(v.grid):
        raise GridMismatch("iterate v lives on a different grid")
    ds = s - s0
    times = grid.times
    a_dev = np.stack([coeffs.a_at(t) - np.eye(coeffs.dim) for t in times])
    f_extra = np.zeros_like(v.values)
    if grid.dim == 1:
        f_extra += _tmul(a_dev[:, 0, 0], finite_diff(v, (2,)).values, grid, 0)
    else:
        f_extra += _tmul(a_dev[:, 0, 0], finite_diff(v, (2, 0)).values, grid, 0)
        f_extra += _tmul(a_dev[:, 1, 1], finite_diff(v, (0, 2)).values, grid, 0)
        f_extra += 2.0 * _tmul(a_dev[:, 0, 1], finite_diff(v, (1, 1)).values, grid, 0)
    b_s = np.stack([coeffs.b_at(t) for t in times])
    c_s = np.asarray([coeffs.c_at(t) for t in times])
    if np.any(b_s) or np.any(c_s):
        if grid.dim == 1:
            f_extra += _tmul(b_s[:, 0], finite_diff(v, (1,)).values, grid, 0)
        else:
            f_extra += _tmul(b_s[:, 0], finite_diff(v, (1, 0)).values, grid, 0)
            f_extra += _tmul(b_s[:, 1], finite_diff(v, (0, 1)).values, grid, 0)
        f_extra += _tmul(c_s, v.values, grid, 0)

    sig = np.stack([coeffs.sigma_at(t) for t in times])  # (nt, dim, K)
    nu = np.stack([coeffs.nu_at(t) for t in times])  # (nt, K)
    g_extra = None
    if np.any(sig) or np.any(nu):
        d1 = finite_diff(v, (1,) if grid.dim == 1 else (1, 0)).values
        d2 = finite_diff(v, (0, 1)).values if grid.dim == 2 else None
        parts = []
        for k in range(coeffs.n_modes):
            term = _tmul(sig[:, 0, k], d1, grid, 0)
            if grid.dim == 2:
                term = term + _tmul(sig[:, 1, k], d2, grid, 0)
            term = term + _tmul(nu[:, k], v.values, grid, 0)
            parts.append(term)
        g_extra = np.stack(parts, axis=-1)

    f_vals = ds * f_extra
    if forcing.f is not None:
        f_vals = forcing.f.values + f_vals
    f_eff = FieldEnsemble(f_vals, grid)
    g_eff = None
    if g_extra is not None or forcing.g is not None:
        g_vals = 0.0
        if g_extra is not None:
            g_vals = ds * g_extra
        if forcing.g is not None:
            g_vals = forcing.g.values + g_vals
        if np.isscalar(g_vals):
            g_eff = None
        else:
            g_eff = FieldEnsemble(np.ascontiguousarray(g_vals), grid, n_modes=coeffs.n_modes)

    frozen = interpolate_coefficients(coeffs, s0)
    return solve_model_halfspace(frozen, Forcing(f=f_eff, g=g_eff), grid, noise, **solver_kw)
