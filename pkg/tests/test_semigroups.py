import numpy as np
import pytest

import semflow as sf
from semflow.errors import DomainError, GridAlignmentError


def hist_grid(n=64):
    return sf.Grid(-1.0, 1.0 / n, n)


def test_apply_identity_at_zero():
    specs = [
        sf.MatrixSemigroup([[-1.0]]),
        sf.NilpotentShift(hist_grid()),
        sf.LeftTranslation(sf.Grid(-2.0, 1.0 / 32, 64)),
    ]
    rng = np.random.default_rng(3)
    for sg in specs:
        x = sf.StateVector(rng.standard_normal(sg.space.dim), sg.space)
        assert np.array_equal(sf.apply(sg, 0.0, x).coords, x.coords)


def test_matrix_apply_scalar_ode_oracle():
    sg = sf.MatrixSemigroup([[-1.0]])
    x = sf.StateVector.sup([1.0])
    assert sf.apply(sg, 1.0, x).coords[0] == pytest.approx(0.3678794411714423,
                                                           abs=1e-12)


def test_negative_time_rejected():
    sg = sf.MatrixSemigroup([[-1.0]])
    with pytest.raises(DomainError):
        sf.apply(sg, -1.0, sf.StateVector.sup([1.0]))


def test_nilpotent_shift_vanishes_at_one():
    sg = sf.NilpotentShift(hist_grid(32))
    f = sf.StateVector.grid_function(np.cos(3 * hist_grid(32).points()) + 2.0,
                                     hist_grid(32))
    out = sf.apply(sg, 1.0, f)
    assert np.all(out.coords == 0.0)
    out2 = sf.apply(sg, 1.5, f)
    assert np.all(out2.coords == 0.0)


def test_shift_incommensurate_time_rejected():
    sg = sf.NilpotentShift(hist_grid(32))
    f = sf.StateVector(np.ones(sg.space.dim), sg.space)
    with pytest.raises(GridAlignmentError):
        sf.apply(sg, 0.013, f)


def test_shift_semigroup_law_exact():
    n = 32
    sg = sf.NilpotentShift(hist_grid(n))
    rng = np.random.default_rng(1)
    f = rng.standard_normal(n + 1)
    one = sg.apply_coords(6.0 / n, sg.apply_coords(5.0 / n, f))
    two = sg.apply_coords(11.0 / n, f)
    assert np.array_equal(one, two)


def test_shift_norm_never_increases():
    n = 32
    sg = sf.NilpotentShift(hist_grid(n))
    rng = np.random.default_rng(2)
    f = sf.StateVector(rng.standard_normal(sg.space.dim), sg.space)
    norms = [sf.apply(sg, k / n, f).norm() for k in range(n + 1)]
    assert all(b <= a + 1e-15 for a, b in zip(norms, norms[1:]))


def test_matrix_semigroup_law():
    rng = np.random.default_rng(4)
    a = rng.standard_normal((3, 3))
    a /= np.max(np.sum(np.abs(a), axis=1))
    sg = sf.MatrixSemigroup(a)
    x = rng.standard_normal(3)
    lhs = sg.apply_coords(0.4, sg.apply_coords(0.9, x))
    rhs = sg.apply_coords(1.3, x)
    assert np.max(np.abs(lhs - rhs)) <= 1e-9


def test_orbit_zero_vector():
    sg = sf.MatrixSemigroup([[-1.0]])
    orb = sf.orbit(sg, sf.StateVector.sup([0.0]), sf.time_grid(2.0, 0.1))
    assert np.all(orb.norms == 0.0)


def test_orbit_scalar_decay_oracle():
    sg = sf.MatrixSemigroup([[-1.0]])
    grid = sf.time_grid(5.0, 0.01)
    orb = sf.orbit(sg, sf.StateVector.sup([1.0]), grid)
    assert np.max(np.abs(orb.norms - np.exp(-grid.points()))) <= 1e-8


def test_orbit_stepwise_matches_direct_apply():
    rng = np.random.default_rng(5)
    a = rng.standard_normal((3, 3)) * 0.4
    sg = sf.MatrixSemigroup(a)
    x = sf.StateVector.sup(rng.standard_normal(3))
    grid = sf.time_grid(3.0, 0.05)
    orb = sf.orbit(sg, x, grid)
    k = grid.index_of(2.0)
    assert np.max(np.abs(orb.states[k] - sf.apply(sg, 2.0, x).coords)) <= 1e-10


def test_orbit_nilpotent_zero_after_one():
    n = 16
    sg = sf.NilpotentShift(hist_grid(n))
    rng = np.random.default_rng(6)
    f = sf.StateVector(rng.standard_normal(sg.space.dim), sg.space)
    grid = sf.time_grid(2.0, 1.0 / n)
    orb = sf.orbit(sg, f, grid)
    ts = grid.points()
    assert np.all(orb.norms[ts >= 1.0] == 0.0)


def test_block_diag_norm_bound():
    # bounded matrix block + nilpotent shift: sup_t ||T0(t)|| <= max(M, 1)
    n = 32
    rot = sf.MatrixSemigroup([[0.0, -1.0], [1.0, 0.0]])
    sg = sf.BlockDiag((rot, sf.NilpotentShift(hist_grid(n))))
    rng = np.random.default_rng(7)
    x = sf.StateVector(rng.standard_normal(sg.space.dim), sg.space)
    grid = sf.Grid(0.0, 1.0 / n, 4 * n)
    orb = sf.orbit(sg, x, grid)
    m_rot = np.sqrt(2.0)  # sup-norm bound of a plane rotation
    assert np.max(orb.norms) <= max(m_rot, 1.0) * x.norm() + 1e-12


def test_hurwitz_decay_envelope():
    rng = np.random.default_rng(8)
    for _ in range(4):
        eigs = -rng.uniform(0.5, 2.0, size=3)
        v = np.eye(3) + 0.2 * rng.standard_normal((3, 3))
        a = v @ np.diag(eigs) @ np.linalg.inv(v)
        omega = -np.max(eigs)
        sg = sf.MatrixSemigroup(a)
        x = sf.StateVector.sup(rng.standard_normal(3))
        grid = sf.time_grid(20.0, 0.05)
        orb = sf.orbit(sg, x, grid)
        ts = grid.points()
        sel = ts >= 1.0
        envelope = 10.0 * np.exp(-0.5 * omega * ts[sel]) * x.norm()
        assert np.all(orb.norms[sel] <= envelope)


def test_left_translation_requires_unit_horizon():
    with pytest.raises(DomainError):
        sf.LeftTranslation(sf.Grid(-0.5, 1.0 / 32, 16))


def test_left_translation_profile_moves_left():
    # values at s are read from s + t: the profile translates toward -L,
    # where it eventually falls off the truncated grid
    n = 64
    grid = sf.Grid(-2.0, 1.0 / 32, n)
    sg = sf.LeftTranslation(grid)
    s = grid.points()
    f = np.where((s >= -1.5) & (s <= -1.0), 1.0, 0.0)
    out = sg.apply_coords(0.5, f)
    expect = np.where((s >= -2.0) & (s <= -1.5), 1.0, 0.0)
    assert np.allclose(out, expect)
    # after two more units everything has left the window
    assert np.all(sg.apply_coords(2.0, f) == 0.0)
