import numpy as np
import pytest

from conftest import E1, scalar_system
from impulse_fac import (
    ControlLaw,
    ImpulseSchedule,
    ImpulsiveSystem,
    QuadratureRule,
    SpectralSemigroup,
    pc_norm,
    propagate,
    right_limit_unrolled,
    saturating_nonlinearity,
)
from impulse_fac.errors import DimensionMismatch, EmptyTrajectory, IndexOutOfRange, MissingFrozenTrajectory, NodeMismatch
from impulse_fac.system import Trajectory, linear_nonlinearity
from impulse_fac.verify import random_system, rng


def test_schedule_validation():
    with pytest.raises(ValueError, match=r"impulse_times\[0\]"):
        ImpulseSchedule((1.5,), 1.0)
    with pytest.raises(ValueError, match=r"impulse_times\[1\]"):
        ImpulseSchedule((0.5, 0.4), 1.0)
    with pytest.raises(ValueError, match="horizon"):
        ImpulseSchedule((), 0.0)
    np.testing.assert_array_equal(ImpulseSchedule((0.25,), 1.0).breakpoints, [0.0, 0.25, 1.0])


def test_system_dimension_checks():
    with pytest.raises(DimensionMismatch):
        ImpulsiveSystem(SpectralSemigroup(np.ones(2)), np.ones((3, 1)), (), (), np.zeros(2), ImpulseSchedule((), 1.0))
    with pytest.raises(DimensionMismatch):
        ImpulsiveSystem(SpectralSemigroup(np.ones(2)), np.ones((2, 1)), (), (), np.zeros(2), ImpulseSchedule((0.5,), 1.0))


def test_free_scalar_decay(scalar, quad):
    traj = propagate(scalar, ControlLaw.zero(scalar, scalar.grid(quad)), quad)
    assert traj.final[0] == pytest.approx(E1, rel=1e-14)
    assert pc_norm(traj) == pytest.approx(1.0)
    # interior samples follow e^{-t}
    for ts, zs in zip(traj.times, traj.states):
        np.testing.assert_allclose(zs[:, 0], np.exp(-ts), rtol=1e-13)


def test_annihilating_jump():
    system = scalar_system(B=-1.0, D=1.0, z0=3.0)
    quad = QuadratureRule(8)
    control = ControlLaw(np.zeros((system.grid(quad).size, 1)), (np.array([0.25]),))
    traj = propagate(system, control, quad)
    assert traj.right_limits[0][0] == pytest.approx(0.25)
    assert traj.final[0] == pytest.approx(0.25 * np.exp(-0.5))


def test_zero_dynamics(quad):
    system = scalar_system(z0=0.0)
    traj = propagate(system, ControlLaw.zero(system, system.grid(quad)), quad)
    assert pc_norm(traj) == 0.0


def test_constant_control_matches_closed_form(quad):
    system = scalar_system(z0=0.0)
    grid = system.grid(quad)
    traj = propagate(system, ControlLaw.from_function(system, grid, lambda s: 1.0), quad)
    assert traj.final[0] == pytest.approx(1 - E1, rel=1e-14)
    for ts, zs in zip(traj.times, traj.states):
        np.testing.assert_allclose(zs[:, 0], 1 - np.exp(-ts), atol=1e-14)


def test_dense_and_spectral_trajectories_agree():
    quad = QuadratureRule(12)
    sp = random_system(3, n=3, p=2, backend="spectral")
    from impulse_fac.semigroup import DenseSemigroup

    de = ImpulsiveSystem(DenseSemigroup(-np.diag(sp.semigroup.decay_rates)), sp.control_map, sp.jumps, sp.impulse_maps, sp.z0, sp.schedule)
    grid = sp.grid(quad)
    control = ControlLaw.from_function(sp, grid, lambda t: np.array([np.cos(t), t]), rng(1).standard_normal((2, 2)))
    a, b = propagate(sp, control, quad), propagate(de, control, quad)
    np.testing.assert_allclose(a.all_states(), b.all_states(), atol=1e-12)


def test_unrolled_simple_cases(quad):
    system = scalar_system(B=0.5, D=2.0, z0=1.0)
    grid = system.grid(quad)
    zero = ControlLaw.zero(system, grid)
    assert right_limit_unrolled(system, zero, quad, None, None, 1)[0] == pytest.approx(1.5 * np.exp(-0.5))
    v = ControlLaw(np.zeros((grid.size, 1)), (np.array([0.3]),))
    assert right_limit_unrolled(system.with_z0([0.0]), v, quad, None, None, 1)[0] == pytest.approx(0.6)
    with pytest.raises(IndexOutOfRange):
        right_limit_unrolled(system, zero, quad, None, None, 2)


def test_unrolled_with_mu_matches_sequential():
    quad = QuadratureRule(10)
    system = random_system(11, n=3, p=3, backend="dense")
    grid = system.grid(quad)
    control = ControlLaw.from_function(system, grid, lambda t: np.array([1.0, -t]), rng(2).standard_normal((3, 2)))
    source = propagate(system, control, quad)
    mu = saturating_nonlinearity(0.7)
    traj = propagate(system, control, quad, mu, source)
    for k in range(1, 4):
        np.testing.assert_allclose(right_limit_unrolled(system, control, quad, mu, source, k), traj.right_limits[k - 1], rtol=1e-12, atol=1e-13)


def test_missing_frozen_trajectory(scalar, quad):
    with pytest.raises(MissingFrozenTrajectory):
        propagate(scalar, ControlLaw.zero(scalar, scalar.grid(quad)), quad, saturating_nonlinearity(0.1), None)


def test_node_mismatch(scalar, quad):
    other = propagate(scalar, ControlLaw.zero(scalar, scalar.grid(QuadratureRule(5))), QuadratureRule(5))
    with pytest.raises(NodeMismatch):
        propagate(scalar, ControlLaw.zero(scalar, scalar.grid(quad)), quad, linear_nonlinearity(1.0), other)
    with pytest.raises(NodeMismatch):
        propagate(scalar, ControlLaw.zero(scalar, scalar.grid(QuadratureRule(5))), quad)


def test_pc_norm_constant_and_empty(quad, scalar):
    grid = scalar.grid(quad)
    c = np.array([3.0])
    traj = Trajectory(grid, (np.zeros(2),), (np.tile(c, (2, 1)),), ())
    assert pc_norm(traj) == pytest.approx(3.0)
    with pytest.raises(EmptyTrajectory):
        pc_norm(Trajectory(grid, (), (), ()))


def test_nonlinearity_shapes():
    mu = saturating_nonlinearity(0.2)
    z = np.array([1.0, 2.0])
    np.testing.assert_allclose(mu.evaluate(0.0, z), 0.2 * z / 6.0)
    assert mu.bound == pytest.approx(0.1)
    lin = linear_nonlinearity(3.0, 2.0)
    np.testing.assert_allclose(lin.evaluate(0.0, z), 6.0 * z)
