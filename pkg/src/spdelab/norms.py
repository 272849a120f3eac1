"""Monte Carlo Hölder norms of path-ensemble fields.

All norms use the expectation-first convention: the magnitude of a field
value (or of a difference) is its L^gamma norm over paths, with an ell^2
reduction over noise modes taken before the absolute value; quotients by
powers of the node distance are formed afterwards, and grid suprema are
taken last.  Grid suprema are lower bounds of the continuum norms; the
refinement studies track their stability instead of claiming exactness.

Pair sets for difference quotients come in three policies: exhaustive
enumeration (default up to a node budget), dyadic index offsets along
each axis (plus unit diagonals and parabolically balanced time-space
offsets), and seeded random sampling.  Every policy enumerates pairs in
a deterministic order, so argmax reporting and reruns are stable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fields import FieldEnsemble, finite_diff

__all__ = [
    "NormSpec",
    "NormResult",
    "SchauderReport",
    "sup_norm",
    "space_seminorm",
    "parabolic_seminorm",
    "trace_parabolic_norm",
    "time_seminorm",
    "schauder_ratio",
    "report_rows",
]

_CHUNK_ELEMS = 2**23  # cap on paths x pairs doubles held at once


@dataclass(frozen=True)
class NormSpec:
    """Hölder exponent, moment order and pair policy for norm estimates."""

    alpha: float
    gamma: float = 2.0
    pair_policy: str = "auto"
    exhaustive_limit: int = 20000
    n_random_pairs: int = 50000
    pair_seed: int = 20260821

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.gamma < 2.0:
            raise ValueError(f"gamma must be at least 2, got {self.gamma}")
        if self.pair_policy not in ("auto", "exhaustive", "dyadic", "random"):
            raise ValueError(f"unknown pair policy {self.pair_policy!r}")


@dataclass
class NormResult:
    kind: str
    value: float
    m: int
    alpha: float
    gamma: float
    beta: tuple = ()
    argmax: tuple = ()
    pairs: int = 0


def _multi_indices(dim, order):
    if dim == 1:
        return [(order,)]
    return [(order - k, k) for k in range(order + 1)]


def _moment(x, gamma, has_modes):
    """L^gamma over paths of the (mode-ell2) magnitude; axis 0 is paths."""
    a = np.sqrt(np.sum(x * x, axis=-1)) if has_modes else np.abs(x)
    if gamma == 2.0:
        return np.sqrt(np.mean(a * a, axis=0))
    return np.mean(a**gamma, axis=0) ** (1.0 / gamma)


# -- pair enumeration -------------------------------------------------


def _offset_pairs(shape, periodic, off):
    """Index pairs (qa, qb) for one lattice offset, flattened C-order."""
    ranges = []
    for n, per, o in zip(shape, periodic, off):
        if per:
            ranges.append(np.arange(n))
        elif o >= 0:
            ranges.append(np.arange(0, n - o))
        else:
            ranges.append(np.arange(-o, n))
    if any(r.size == 0 for r in ranges):
        return None
    grids = np.meshgrid(*ranges, indexing="ij")
    ia = [g.ravel() for g in grids]
    ib = []
    for g, (n, per, o) in zip(ia, zip(shape, periodic, off)):
        ib.append((g + o) % n if per else g + o)
    return np.ravel_multi_index(ia, shape), np.ravel_multi_index(ib, shape)


def _dyadic_offsets(shape, periodic, time_axis):
    offs = []
    ndim = len(shape)
    for a, n in enumerate(shape):
        cap = n // 2 if periodic[a] else n - 1
        o = 1
        while o <= cap:
            v = [0] * ndim
            v[a] = o
            offs.append(tuple(v))
            o *= 2
    space_axes = [a for a in range(ndim) if a != time_axis]
    for i in range(len(space_axes)):
        for j in range(i + 1, len(space_axes)):
            for s in (1, -1):
                v = [0] * ndim
                v[space_axes[i]] = 1
                v[space_axes[j]] = s
                offs.append(tuple(v))
    if time_axis is not None:
        # parabolically balanced offsets: 4^j steps against 2^j cells
        for a in space_axes:
            cap = shape[a] // 2 if periodic[a] else shape[a] - 1
            j = 1
            while 4**j <= shape[time_axis] - 1 and 2**j <= cap:
                v = [0] * ndim
                v[time_axis] = 4**j
                v[a] = 2**j
                offs.append(tuple(v))
                j += 1
    return offs


def _pairs(shape, periodic, time_axis, spec: NormSpec):
    n_pts = int(np.prod(shape))
    policy = spec.pair_policy
    if policy == "auto":
        policy = "exhaustive" if n_pts <= spec.exhaustive_limit else "dyadic"
    if policy == "exhaustive":
        if n_pts > spec.exhaustive_limit:
            raise ValueError(
                f"{n_pts} nodes exceed the exhaustive budget {spec.exhaustive_limit}"
            )
        qa, qb = np.triu_indices(n_pts, k=1)
        return qa.astype(np.int64), qb.astype(np.int64), "exhaustive"
    if policy == "dyadic":
        parts = []
        for off in _dyadic_offsets(shape, periodic, time_axis):
            pair = _offset_pairs(shape, periodic, off)
            if pair is not None:
                parts.append(pair)
        qa = np.concatenate([p[0] for p in parts])
        qb = np.concatenate([p[1] for p in parts])
        keep = qa != qb
        return qa[keep], qb[keep], "dyadic"
    # random: seeded, rejection-free draw of ordered pairs
    gen = np.random.Generator(np.random.PCG64(spec.pair_seed))
    qa = gen.integers(0, n_pts, spec.n_random_pairs)
    qb = gen.integers(0, n_pts - 1, spec.n_random_pairs)
    qb = np.where(qb >= qa, qb + 1, qb)
    return qa.astype(np.int64), qb.astype(np.int64), "random"


def _denominators(shape, spacings, periodic, time_axis, alpha, qa, qb):
    ia = np.unravel_index(qa, shape)
    ib = np.unravel_index(qb, shape)
    space_sq = np.zeros(qa.shape)
    dt_term = np.zeros(qa.shape)
    for a, (n, h, per) in enumerate(zip(shape, spacings, periodic)):
        d = np.abs(ia[a].astype(np.int64) - ib[a].astype(np.int64))
        if per:
            d = np.minimum(d, n - d)
        if a == time_axis:
            dt_term = (d * h) ** (alpha / 2.0)
        else:
            space_sq = space_sq + (d * h) ** 2
    return np.sqrt(space_sq) ** alpha + dt_term


def _max_quotient(flat, qa, qb, denom, gamma, has_modes):
    """Running max over pair chunks of moment(difference) / denominator.

    flat: (paths, n_pts[, modes]).  Returns (max, argmax pair index).
    """
    n_paths = flat.shape[0]
    step = max(1, _CHUNK_ELEMS // max(n_paths, 1))
    best, best_at = 0.0, -1
    for lo in range(0, qa.size, step):
        sl = slice(lo, lo + step)
        diff = flat[:, qa[sl], ...] - flat[:, qb[sl], ...]
        q = _moment(diff, gamma, has_modes) / denom[sl]
        k = int(np.argmax(q))
        if q[k] > best:
            best, best_at = float(q[k]), lo + k
    return best, best_at


def _grid_geometry(grid, with_time):
    shape, spacings, periodic = [], [], []
    if with_time:
        shape.append(grid.steps + 1)
        spacings.append(grid.dt)
        periodic.append(False)
    shape.append(grid.n_x1)
    spacings.append(grid.dx1)
    periodic.append(grid.periodic_x1)
    if grid.dim == 2:
        shape.append(grid.n_xp)
        spacings.append(grid.dxp)
        periodic.append(True)
    return tuple(shape), tuple(spacings), tuple(periodic)


def sup_norm(f: FieldEnsemble, spec: NormSpec, m: int = 0) -> NormResult:
    """max over |beta| <= m and grid nodes of the moment magnitude."""
    best = NormResult("sup", -1.0, m, spec.alpha, spec.gamma)
    for order in range(m + 1):
        for beta in _multi_indices(f.grid.dim, order):
            g = finite_diff(f, beta) if order else f
            prof = _moment(g.values, spec.gamma, f.n_modes > 0)
            k = int(np.argmax(prof))
            v = float(prof.ravel()[k])
            if v > best.value:
                best.value = v
                best.beta = beta
                best.argmax = np.unravel_index(k, prof.shape)
    return best


def space_seminorm(f: FieldEnsemble, spec: NormSpec, m: int = 0) -> NormResult:
    """max over |beta| = m, times, and node pairs of the space quotient."""
    shape, spacings, periodic = _grid_geometry(f.grid, with_time=False)
    qa, qb, policy = _pairs(shape, periodic, None, spec)
    denom = _denominators(shape, spacings, periodic, None, spec.alpha, qa, qb)
    n_pts = int(np.prod(shape))
    best = NormResult(f"space_seminorm[{policy}]", 0.0, m, spec.alpha, spec.gamma)
    best.pairs = qa.size * (f.grid.steps + 1)
    for beta in _multi_indices(f.grid.dim, m):
        g = finite_diff(f, beta) if m else f
        nt = f.grid.steps + 1
        vals = g.values.reshape((g.n_paths, nt, n_pts) + ((f.n_modes,) if f.n_modes else ()))
        for j in range(nt):
            v, at = _max_quotient(vals[:, j], qa, qb, denom, spec.gamma, f.n_modes > 0)
            if v > best.value:
                best.value = v
                best.beta = beta
                best.argmax = (
                    j,
                    np.unravel_index(qa[at], shape),
                    np.unravel_index(qb[at], shape),
                )
    return best


def _parabolic_core(values, n_modes, shape, spacings, periodic, spec):
    n_pts = int(np.prod(shape))
    qa, qb, policy = _pairs(shape, periodic, 0, spec)
    denom = _denominators(shape, spacings, periodic, 0, spec.alpha, qa, qb)
    flat = values.reshape((values.shape[0], n_pts) + ((n_modes,) if n_modes else ()))
    v, at = _max_quotient(flat, qa, qb, denom, spec.gamma, n_modes > 0)
    arg = (np.unravel_index(qa[at], shape), np.unravel_index(qb[at], shape))
    return v, arg, qa.size, policy


def parabolic_seminorm(f: FieldEnsemble, spec: NormSpec, m: int = 0) -> NormResult:
    """max over |beta| = m of the space-time quotient seminorm.

    Denominator |x - y|^alpha + |t - s|^{alpha/2} over all enumerated
    space-time node pairs.
    """
    shape, spacings, periodic = _grid_geometry(f.grid, with_time=True)
    best = NormResult("parabolic_seminorm", 0.0, m, spec.alpha, spec.gamma)
    for beta in _multi_indices(f.grid.dim, m):
        g = finite_diff(f, beta) if m else f
        v, arg, pairs, policy = _parabolic_core(
            g.values, f.n_modes, shape, spacings, periodic, spec
        )
        best.kind = f"parabolic_seminorm[{policy}]"
        best.pairs = pairs
        if v > best.value:
            best.value = v
            best.beta = beta
            best.argmax = arg
    return best


def trace_parabolic_norm(f: FieldEnsemble, spec: NormSpec) -> tuple:
    """Composite parabolic norm of the wall trace: sup + seminorm.

    On a dim-1 grid the trace lives on a single spatial point and the
    seminorm reduces to the pure time quotient.
    """
    trace = f.values[:, :, f.grid.wall_index, ...]
    shape = [f.grid.steps + 1]
    spacings = [f.grid.dt]
    periodic = [False]
    if f.grid.dim == 2:
        shape.append(f.grid.n_xp)
        spacings.append(f.grid.dxp)
        periodic.append(True)
    sup = float(np.max(_moment(trace, spec.gamma, f.n_modes > 0)))
    v, arg, pairs, policy = _parabolic_core(
        trace, f.n_modes, tuple(shape), tuple(spacings), tuple(periodic), spec
    )
    semi = NormResult(f"trace_parabolic[{policy}]", v, 0, spec.alpha, spec.gamma)
    semi.argmax, semi.pairs = arg, pairs
    return sup, semi


def time_seminorm(samples, times, exponent, gamma=2.0) -> float:
    """sup over time pairs of moment(x(t) - x(s)) / |t - s|^exponent.

    samples: (paths, n_times).  Exhaustive pair enumeration; used for
    pure boundary-data seminorms such as the h' Hölder constant.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    times = np.asarray(times, dtype=float)
    ja, jb = np.triu_indices(times.size, k=1)
    diffs = samples[:, ja] - samples[:, jb]
    mom = _moment(diffs, gamma, False)
    return float(np.max(mom / np.abs(times[ja] - times[jb]) ** exponent))


@dataclass
class SchauderReport:
    lhs: float
    rhs: float
    ratio: float
    sentinel: str = ""
    parts: dict = field(default_factory=dict)
    results: list = field(default_factory=list)


def schauder_ratio(u, f, g, spec: NormSpec) -> SchauderReport:
    """Ratio of the solution norm to the data norm.

    lhs: sup norm of u through second derivatives plus the parabolic
    seminorm of the second derivatives.  rhs: Hölder norm of f in space,
    parabolic norm of the wall trace of f, and the order-one norm of g
    (ell2 over modes inside the moment).  Both sides vanishing yields a
    0/0 sentinel instead of a ratio.
    """
    lhs_sup = sup_norm(u, spec, m=2)
    lhs_semi = parabolic_seminorm(u, spec, m=2)
    lhs = lhs_sup.value + lhs_semi.value

    f_sup = sup_norm(f, spec, m=0)
    f_space = space_seminorm(f, spec, m=0)
    f_trace_sup, f_trace_semi = trace_parabolic_norm(f, spec)
    rhs = f_sup.value + f_space.value + f_trace_sup + f_trace_semi.value
    parts = {
        "u_sup_m2": lhs_sup.value,
        "u_parabolic_m2": lhs_semi.value,
        "f_sup": f_sup.value,
        "f_space_seminorm": f_space.value,
        "f_trace_sup": f_trace_sup,
        "f_trace_seminorm": f_trace_semi.value,
    }
    results = [lhs_sup, lhs_semi, f_sup, f_space, f_trace_semi]
    if g is not None:
        g_sup = sup_norm(g, spec, m=1)
        g_space = space_seminorm(g, spec, m=1)
        rhs += g_sup.value + g_space.value
        parts["g_sup_m1"] = g_sup.value
        parts["g_space_seminorm_m1"] = g_space.value
        results += [g_sup, g_space]

    if lhs == 0.0 and rhs == 0.0:
        return SchauderReport(lhs, rhs, math.nan, sentinel="0/0", parts=parts, results=results)
    return SchauderReport(lhs, rhs, lhs / rhs, parts=parts, results=results)


def report_rows(results, field_id, grid_id, seed) -> list:
    """Serialize NormResults to the canonical CSV row dicts."""
    rows = []
    for r in results:
        rows.append(
            {
                "field_id": field_id,
                "m": r.m,
                "alpha": r.alpha,
                "gamma": r.gamma,
                "kind": r.kind,
                "value": r.value,
                "argmax_pair": str(r.argmax),
                "pairs_evaluated": r.pairs,
                "grid_id": grid_id,
                "seed": seed,
            }
        )
    return rows
