"""Counter-based Gaussian stream: determinism, statistics, coarsening."""

from __future__ import annotations

import numpy as np
import pytest

from spdelab import (
    SeedSpec,
    WienerBatch,
    coarsen,
    partial_sums,
    standard_normals,
    wiener_increments,
)

SEED = SeedSpec(master_seed=987654321, stream_salt=7)


def test_standard_normals_bit_identical_rerun():
    a = standard_normals(SEED, np.arange(16), np.arange(32), np.arange(3))
    b = standard_normals(SEED, np.arange(16), np.arange(32), np.arange(3))
    assert a.shape == (16, 32, 3)
    assert np.array_equal(a, b)


def test_standard_normals_indexed_by_labels_not_layout():
    # any sub-block equals the corresponding slice of the full lattice
    full = standard_normals(SEED, np.arange(10), np.arange(5), np.arange(2))
    some = standard_normals(SEED, np.array([3, 7, 9]), np.arange(5), np.arange(2))
    assert np.array_equal(some, full[[3, 7, 9]])
    one_step = standard_normals(SEED, np.arange(10), np.array([4]), np.array([1]))
    assert np.array_equal(one_step[:, 0, 0], full[:, 4, 1])


def test_seed_and_salt_separate_streams():
    base = standard_normals(SEED, np.arange(8), np.arange(8), np.arange(1))
    other_seed = standard_normals(
        SeedSpec(master_seed=987654322, stream_salt=7), np.arange(8), np.arange(8), np.arange(1)
    )
    other_salt = standard_normals(
        SeedSpec(master_seed=987654321, stream_salt=8), np.arange(8), np.arange(8), np.arange(1)
    )
    assert not np.array_equal(base, other_seed)
    assert not np.array_equal(base, other_salt)


def test_seed_spec_rejects_out_of_range_values():
    with pytest.raises(ValueError):
        SeedSpec(master_seed=-1)
    with pytest.raises(ValueError):
        SeedSpec(master_seed=2**64)
    with pytest.raises(TypeError):
        standard_normals(123, np.arange(2), np.arange(2), np.arange(1))


def test_standard_normals_moments():
    z = standard_normals(SEED, np.arange(200), np.arange(500), np.arange(1)).ravel()
    n = z.size
    # mean of n iid N(0,1) has sd 1/sqrt(n); 4 sigma bound
    assert abs(z.mean()) < 4.0 / np.sqrt(n)
    assert abs(z.var() - 1.0) < 0.02
    # tails exist but are not wild
    assert np.max(np.abs(z)) < 6.0
    assert np.mean(np.abs(z) > 1.96) == pytest.approx(0.05, abs=0.01)


def test_no_invalid_value_warnings():
    with np.errstate(all="raise"):
        # overflow in the integer mix must stay contained
        z = standard_normals(SEED, np.arange(64), np.arange(64), np.arange(2))
    assert np.all(np.isfinite(z))


def test_wiener_increment_variance_matches_dt():
    dt = 1e-3
    batch = wiener_increments(SEED, 400, 250, dt=dt)
    assert batch.increments.shape == (400, 250, 1)
    assert batch.dt == dt
    assert batch.increments.var() == pytest.approx(dt, rel=0.05)
    w_end = partial_sums(batch)[:, -1, 0]
    # Var(w_T) = T
    assert w_end.var() == pytest.approx(250 * dt, rel=0.15)


def test_worker_block_reproduces_full_batch():
    full = wiener_increments(SEED, 12, 40, dt=0.01, n_modes=2)
    block = wiener_increments(
        SEED, 5, 40, dt=0.01, n_modes=2, path_indices=np.arange(4, 9)
    )
    assert np.array_equal(block.increments, full.increments[4:9])


def test_path_indices_shape_is_validated():
    with pytest.raises(ValueError):
        wiener_increments(SEED, 3, 10, dt=0.1, path_indices=np.arange(4))


def test_partial_sums_is_cumulative_sum():
    inc = np.arange(24, dtype=float).reshape(2, 4, 3)
    batch = WienerBatch(increments=inc, dt=0.5, seed=SEED)
    w = partial_sums(batch)
    assert w.shape == (2, 4, 3)
    assert np.array_equal(w[:, 0], inc[:, 0])
    assert np.array_equal(w[:, -1], inc.sum(axis=1))
    assert np.array_equal(np.diff(w, axis=1), inc[:, 1:])


def test_coarsen_sums_consecutive_increments():
    fine = wiener_increments(SEED, 6, 32, dt=0.25, n_modes=2)
    coarse = coarsen(fine, 4)
    assert coarse.dt == pytest.approx(1.0)
    assert coarse.n_steps == 8
    expect = fine.increments.reshape(6, 8, 4, 2).sum(axis=2)
    assert np.array_equal(coarse.increments, expect)
    # Wiener values agree exactly at the shared time nodes
    w_fine = partial_sums(fine)
    w_coarse = partial_sums(coarse)
    assert np.allclose(w_coarse, w_fine[:, 3::4], atol=1e-12)


def test_coarsen_rejects_nondivisor():
    batch = wiener_increments(SEED, 2, 10, dt=0.1)
    with pytest.raises(ValueError):
        coarsen(batch, 3)


def test_increment_values_come_from_the_lattice():
    # dt = 4 keeps the scaling factor exactly representable
    batch = wiener_increments(SEED, 3, 7, dt=4.0, n_modes=2)
    z = standard_normals(SEED, np.arange(3), np.arange(7), np.arange(2))
    assert np.array_equal(batch.increments, 2.0 * z)
