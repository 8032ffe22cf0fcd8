import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import E1, E_HALF, SCALAR_TOTAL, scalar_system
from impulse_fac import QuadratureRule, apply_M, apply_M_star, assemble, closed_form_bundle, materialize_MMstar
from impulse_fac.errors import IndexOutOfRange, UnsupportedBackend
from impulse_fac.gramian import distributed_left_factor, free_final_map, impulse_left_factor
from impulse_fac.verify import random_system, rng


def test_scalar_blocks(scalar, quad):
    b = assemble(scalar, quad)
    assert b.gamma[0, 0] == pytest.approx((1 - E1) / 2, rel=1e-14)
    assert b.theta[0, 0] == pytest.approx(E1 * (1 - E1) / 2, rel=1e-14)
    assert b.gamma_tilde[0, 0] == 0.0 and b.theta_tilde[0, 0] == 0.0
    assert b.total[0, 0] == pytest.approx(SCALAR_TOTAL, rel=1e-14)


def test_scalar_blocks_match_independent_quadrature(scalar):
    from scipy.integrate import quad as adaptive

    gamma, _ = adaptive(lambda s: np.exp(-2 * (1 - s)), 0.5, 1.0, epsabs=1e-15)
    head, _ = adaptive(lambda s: np.exp(-2 * (0.5 - s)), 0.0, 0.5, epsabs=1e-15)
    b = closed_form_bundle(scalar)
    assert b.gamma[0, 0] == pytest.approx(gamma, rel=1e-13)
    assert b.theta[0, 0] == pytest.approx(E1 * head, rel=1e-13)


def test_transport_factors(scalar):
    assert free_final_map(scalar)[0, 0] == pytest.approx(E1)
    assert distributed_left_factor(scalar, 1)[0, 0] == pytest.approx(E_HALF)
    np.testing.assert_array_equal(distributed_left_factor(scalar, 2), np.eye(1))
    assert impulse_left_factor(scalar_system(D=1.0), 1)[0, 0] == pytest.approx(E_HALF)
    assert impulse_left_factor(scalar, 1)[0, 0] == 0.0
    with pytest.raises(IndexOutOfRange):
        distributed_left_factor(scalar, 3)
    with pytest.raises(IndexOutOfRange):
        impulse_left_factor(scalar, 0)


def test_annihilating_jump_kills_transport():
    system = scalar_system(B=-1.0)
    assert free_final_map(system)[0, 0] == 0.0
    assert distributed_left_factor(system, 1)[0, 0] == 0.0


def test_no_impulse_free_map():
    from impulse_fac import ImpulseSchedule, ImpulsiveSystem, SpectralSemigroup

    system = ImpulsiveSystem(SpectralSemigroup(np.array([2.0])), np.ones((1, 1)), (), (), np.ones(1), ImpulseSchedule((), 1.5))
    assert free_final_map(system)[0, 0] == pytest.approx(np.exp(-3.0))


def test_zero_control_maps_give_zero_blocks(quad):
    b = assemble(scalar_system(omega=0.0, D=0.0), quad)
    for block in b.blocks.values():
        assert np.all(block == 0.0)
    np.testing.assert_array_equal(closed_form_bundle(scalar_system(omega=0.0)).total, 0.0)


def test_single_impulse_has_no_transported_impulse_block():
    b = assemble(random_system(5, n=3, p=1), QuadratureRule(8))
    np.testing.assert_array_equal(b.theta_tilde, 0.0)


def test_terminal_impulse_block():
    system = random_system(6, n=3, p=2)
    b = assemble(system, QuadratureRule(8))
    K = system.semigroup.operator_matrix(system.horizon - system.schedule.impulse_times[-1]) @ system.impulse_maps[-1]
    np.testing.assert_allclose(b.gamma_tilde, K @ K.T, atol=1e-14)


def test_apply_M_examples(scalar, quad):
    grid = scalar.grid(quad)
    assert apply_M(scalar, np.zeros((grid.size, 1)), [np.zeros(1)], quad)[0] == 0.0
    ones = apply_M(scalar, np.ones((grid.size, 1)), [np.zeros(1)], quad)
    assert ones[0] == pytest.approx(E_HALF * (1 - E_HALF) + (1 - E_HALF), rel=1e-14)
    system = random_system(7, n=3, p=2)
    b = assemble(system, quad)
    vs = [rng(8).standard_normal(2), rng(9).standard_normal(2)]
    impulse_only = apply_M(system, np.zeros((system.grid(quad).size, 2)), vs, quad, b)
    np.testing.assert_allclose(impulse_only, sum(K @ v for K, v in zip(b.impulse_factors, vs)), atol=1e-14)


def test_apply_M_star_scalar(scalar, quad):
    u, v = apply_M_star(scalar, np.array([1.0]), quad)
    grid = scalar.grid(quad)
    s = grid.nodes
    expected = np.where(s < 0.5, E_HALF * np.exp(-(0.5 - s)), np.exp(-(1 - s)))
    np.testing.assert_allclose(u[:, 0], expected, rtol=1e-14)
    assert v[0][0] == 0.0
    u0, v0 = apply_M_star(scalar, np.zeros(1), quad)
    assert not u0.any() and not v0[0].any()


@given(st.integers(0, 1000), st.sampled_from(["spectral", "dense"]))
def test_adjoint_pairing(seed, backend):
    quad = QuadratureRule(6)
    system = random_system(seed, n=3, p=2, backend=backend)
    b = assemble(system, quad)
    grid = system.grid(quad)
    g = rng(seed + 1)
    u = g.standard_normal((grid.size, system.m))
    v = [g.standard_normal(system.impulse_dim) for _ in range(system.p)]
    phi = g.standard_normal(system.n)
    us, vs = apply_M_star(system, phi, quad, b)
    lhs = phi @ apply_M(system, u, v, quad, b)
    rhs = np.sum(grid.weights[:, None] * u * us) + sum(a @ c for a, c in zip(v, vs))
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-12)


def test_mmstar_equals_total_dense():
    quad = QuadratureRule(10)
    system = random_system(21, n=4, p=3, backend="dense")
    b = assemble(system, quad)
    np.testing.assert_allclose(materialize_MMstar(system, quad, b), b.total, rtol=1e-12, atol=1e-14)


def test_closed_form_rejects_dense():
    with pytest.raises(UnsupportedBackend):
        closed_form_bundle(random_system(1, backend="dense"))


def test_closed_form_degenerate_exponent():
    from impulse_fac import ImpulseSchedule, ImpulsiveSystem, SpectralSemigroup

    system = ImpulsiveSystem(SpectralSemigroup(np.array([0.0])), np.ones((1, 1)), (), (), np.zeros(1), ImpulseSchedule((), 0.75))
    assert closed_form_bundle(system).total[0, 0] == pytest.approx(0.75)


def test_total_is_psd_and_symmetric():
    b = assemble(random_system(30, n=6, p=3, m=1, r=1), QuadratureRule(10))
    np.testing.assert_array_equal(b.total, b.total.T)
    assert np.linalg.eigvalsh(b.total)[0] > -1e-14
