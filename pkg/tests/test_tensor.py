import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hsiunmix.tensor import (
    fold,
    frobenius,
    khatri_rao,
    reconstruct,
    scaled_endmembers,
    unfold,
)


def test_unfold_mode1_hand_example():
    # t(i,j,k) = i + 10 j + 100 k (1-based indices)
    t = np.empty((2, 2, 2))
    for i in range(2):
        for j in range(2):
            for k in range(2):
                t[i, j, k] = (i + 1) + 10 * (j + 1) + 100 * (k + 1)
    m = unfold(t, 1)
    assert m.shape == (4, 2)
    # column i lists (j, k) in order (1,1), (1,2), (2,1), (2,2)
    np.testing.assert_array_equal(m[:, 0], [111, 211, 121, 221])
    np.testing.assert_array_equal(m[:, 1], [112, 212, 122, 222])


def test_unfold_shapes():
    t = np.zeros((3, 4, 5))
    assert unfold(t, 1).shape == (20, 3)
    assert unfold(t, 2).shape == (15, 4)
    assert unfold(t, 3).shape == (12, 5)


def test_unfold_rank1_is_khatri_rao():
    rng = np.random.default_rng(0)
    a, b, c = rng.random(3), rng.random(4), rng.random(5)
    t = np.einsum("i,j,k->ijk", a, b, c)
    expected = khatri_rao(b[:, None], c[:, None]) @ a[None, :]
    np.testing.assert_allclose(unfold(t, 1), expected, atol=1e-14)


@pytest.mark.parametrize("mode", [1, 2, 3])
def test_fold_roundtrip_bitwise(mode):
    rng = np.random.default_rng(mode)
    t = rng.random((3, 4, 5))
    assert np.array_equal(fold(unfold(t, mode), mode, t.shape), t)


def test_fold_hand_example():
    t = np.arange(8, dtype=float).reshape(2, 2, 2)
    np.testing.assert_array_equal(fold(unfold(t, 1), 1, (2, 2, 2)), t)


def test_fold_bad_shape():
    with pytest.raises(ValueError):
        fold(np.zeros((5, 2)), 1, (2, 2, 2))


def test_unfold_bad_mode():
    with pytest.raises(ValueError):
        unfold(np.zeros((2, 2, 2)), 0)


def test_khatri_rao_row_vectors():
    m1 = np.array([[1.0, 2.0, 3.0]])
    m2 = np.array([[4.0, 5.0, 6.0]])
    np.testing.assert_array_equal(khatri_rao(m1, m2), [[4.0, 10.0, 18.0]])


def test_khatri_rao_hand_kron():
    m1 = np.array([[1.0], [2.0]])
    m2 = np.array([[3.0], [4.0]])
    np.testing.assert_array_equal(khatri_rao(m1, m2), [[3.0], [4.0], [6.0], [8.0]])


def test_khatri_rao_per_column_kron():
    rng = np.random.default_rng(1)
    m1, m2 = rng.random((3, 2)), rng.random((4, 2))
    out = khatri_rao(m1, m2)
    for r in range(2):
        np.testing.assert_array_equal(out[:, r], np.kron(m1[:, r], m2[:, r]))


def test_khatri_rao_column_mismatch():
    with pytest.raises(ValueError):
        khatri_rao(np.zeros((2, 2)), np.zeros((2, 3)))


def test_reconstruct_rank1():
    a = np.array([[1.0], [2.0]])
    b = np.array([[1.0], [0.0]])
    psi = np.array([[1.0], [1.0]])
    t = reconstruct(a, b, psi)
    np.testing.assert_array_equal(t[:, 0, :], [[1.0, 1.0], [2.0, 2.0]])
    np.testing.assert_array_equal(t[:, 1, :], np.zeros((2, 2)))


def test_reconstruct_matches_triple_loop():
    rng = np.random.default_rng(2)
    a, b, psi = rng.random((3, 2)), rng.random((4, 2)), rng.random((5, 2))
    t = reconstruct(a, b, psi)
    for i in range(3):
        for j in range(4):
            for k in range(5):
                ref = sum(a[i, r] * b[j, r] * psi[k, r] for r in range(2))
                assert abs(t[i, j, k] - ref) < 1e-12


def test_reconstruct_rank_mismatch():
    with pytest.raises(ValueError):
        reconstruct(np.zeros((2, 2)), np.zeros((3, 2)), np.zeros((4, 3)))


@pytest.mark.parametrize("mode", [1, 2, 3])
def test_unfolding_khatri_rao_identity(mode):
    rng = np.random.default_rng(3)
    a, b, psi = rng.random((6, 3)), rng.random((4, 3)), rng.random((5, 3))
    t = reconstruct(a, b, psi)
    products = {
        1: khatri_rao(b, psi) @ a.T,
        2: khatri_rao(a, psi) @ b.T,
        3: khatri_rao(a, b) @ psi.T,
    }
    err = np.linalg.norm(unfold(t, mode) - products[mode]) / np.linalg.norm(t)
    assert err < 1e-10


def test_frobenius_basics():
    assert frobenius(np.zeros((2, 3, 4))) == 0.0
    t = np.zeros((2, 2, 2))
    t[1, 0, 1] = 3.0
    assert frobenius(t) == 3.0


def test_frobenius_unfolding_invariance():
    rng = np.random.default_rng(4)
    t = rng.standard_normal((3, 4, 5))
    f = frobenius(t)
    for mode in (1, 2, 3):
        assert abs(np.linalg.norm(unfold(t, mode)) - f) <= 1e-12 * f


def test_scaled_endmembers_identity_and_zero():
    rng = np.random.default_rng(5)
    b = rng.random((4, 3))
    psi = np.ones((2, 3))
    np.testing.assert_array_equal(scaled_endmembers(b, psi, 0), b)
    psi[1, 1] = 0.0
    out = scaled_endmembers(b, psi, 1)
    np.testing.assert_array_equal(out[:, 1], np.zeros(4))


def test_scaled_endmembers_frontal_slice_identity():
    rng = np.random.default_rng(6)
    a, b, psi = rng.random((5, 3)), rng.random((4, 3)), rng.random((3, 3))
    t = reconstruct(a, b, psi)
    for k in range(3):
        slice_k = t[:, :, k]
        np.testing.assert_allclose(slice_k, a @ scaled_endmembers(b, psi, k).T, atol=1e-12)


def test_scaled_endmembers_out_of_range():
    with pytest.raises(ValueError):
        scaled_endmembers(np.zeros((4, 2)), np.zeros((3, 2)), 3)


@settings(max_examples=25, deadline=None)
@given(
    st.integers(1, 5),
    st.integers(1, 5),
    st.integers(1, 5),
    st.sampled_from([1, 2, 3]),
    st.integers(0, 2**31 - 1),
)
def test_fold_unfold_roundtrip_property(i, j, k, mode, seed):
    t = np.random.default_rng(seed).standard_normal((i, j, k))
    assert np.array_equal(fold(unfold(t, mode), mode, (i, j, k)), t)
