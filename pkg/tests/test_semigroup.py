import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from impulse_fac.errors import NegativeTime
from impulse_fac.semigroup import DenseSemigroup, SpectralSemigroup, max_operator_norm

NILPOTENT = np.array([[0.0, 1.0], [0.0, 0.0]])


def test_spectral_apply():
    S = SpectralSemigroup(np.array([1.0, 4.0]))
    v = np.array([3.0, -2.0])
    np.testing.assert_array_equal(S.apply(0.0, v), v)
    assert SpectralSemigroup(np.array([1.0])).apply(1.0, np.array([1.0]))[0] == pytest.approx(0.36787944117144233, rel=1e-15)
    np.testing.assert_array_equal(S.apply_adjoint(0.7, v), S.apply(0.7, v))


def test_spectral_operator_matrix():
    S = SpectralSemigroup(np.array([1.0, 2.0]))
    np.testing.assert_allclose(S.operator_matrix(1.0), np.diag([np.exp(-1), np.exp(-2)]), rtol=1e-15)
    np.testing.assert_array_equal(S.operator_matrix(0.0), np.eye(2))


def test_dense_nilpotent():
    S = DenseSemigroup(NILPOTENT)
    np.testing.assert_allclose(S.apply(1.0, np.array([0.0, 1.0])), [1.0, 1.0], atol=1e-15)
    np.testing.assert_allclose(S.apply_adjoint(1.0, np.array([1.0, 0.0])), [1.0, 1.0], atol=1e-15)
    np.testing.assert_allclose(S.operator_matrix(2.0), [[1.0, 2.0], [0.0, 1.0]], atol=1e-15)
    np.testing.assert_array_equal(S.apply_adjoint(0.0, np.array([1.0, 2.0])), [1.0, 2.0])


def test_negative_time():
    with pytest.raises(NegativeTime):
        SpectralSemigroup(np.array([1.0])).apply(-0.1, np.array([1.0]))
    with pytest.raises(NegativeTime):
        DenseSemigroup(NILPOTENT).operator_matrix(-1e-6)
    # round-off below zero is clamped
    np.testing.assert_array_equal(DenseSemigroup(NILPOTENT).operator_matrix(-1e-14), np.eye(2))


@given(st.floats(0, 3), st.floats(0, 3))
def test_semigroup_property_dense(s, t):
    A = np.array([[-1.0, 0.5, 0.0], [0.2, -2.0, 0.3], [0.0, -0.4, -0.5]])
    S = DenseSemigroup(A)
    np.testing.assert_allclose(S.operator_matrix(s + t), S.operator_matrix(s) @ S.operator_matrix(t), atol=1e-12)


def test_apply_many_and_weighted_gramian_agree_between_backends():
    rates = np.array([0.5, 1.5, 3.0])
    spec, dense = SpectralSemigroup(rates), DenseSemigroup(-np.diag(rates))
    ts = np.linspace(0, 1, 7)
    V = np.arange(21.0).reshape(7, 3)
    np.testing.assert_allclose(spec.apply_many(ts, V), dense.apply_many(ts, V), rtol=1e-13)
    Q = np.array([[1.0, 0.2, 0.0], [0.2, 2.0, 0.1], [0.0, 0.1, 1.0]])
    w = np.full(7, 1 / 7)
    np.testing.assert_allclose(spec.weighted_gramian(ts, w, Q), dense.weighted_gramian(ts, w, Q), rtol=1e-13)


def test_max_operator_norm():
    assert max_operator_norm(SpectralSemigroup(np.array([1.0, 2.0])), [0.0, 0.5, 1.0]) == pytest.approx(1.0)
