import numpy as np
import pytest

from hsiunmix.morphology import (
    DiskSE,
    closing_by_reconstruction,
    dilate,
    erode,
    opening_by_reconstruction,
    reconstruct_by_dilation,
)


def brute_dilate4(img):
    out = img.copy()
    out[1:, :] = np.maximum(out[1:, :], img[:-1, :])
    out[:-1, :] = np.maximum(out[:-1, :], img[1:, :])
    out[:, 1:] = np.maximum(out[:, 1:], img[:, :-1])
    out[:, :-1] = np.maximum(out[:, :-1], img[:, 1:])
    return out


def brute_reconstruct(marker, mask):
    """Naive stability iteration, the contract the fast path must match."""
    cur = marker.copy()
    while True:
        nxt = np.minimum(brute_dilate4(cur), mask)
        if np.array_equal(nxt, cur):
            return cur
        cur = nxt


def test_disk_se_masks():
    assert DiskSE(0).mask.shape == (1, 1)
    np.testing.assert_array_equal(
        DiskSE(1).mask, [[False, True, False], [True, True, True], [False, True, False]]
    )
    with pytest.raises(ValueError):
        DiskSE(-1)


def test_constant_image_invariance():
    img = np.full((7, 7), 2.5)
    se = DiskSE(2)
    np.testing.assert_array_equal(erode(img, se), img)
    np.testing.assert_array_equal(dilate(img, se), img)
    np.testing.assert_array_equal(closing_by_reconstruction(img, se), img)


def test_radius_zero_identity():
    img = np.random.default_rng(0).random((5, 6))
    for op in (erode, dilate, opening_by_reconstruction, closing_by_reconstruction):
        np.testing.assert_array_equal(op(img, DiskSE(0)), img)


def test_single_pixel_dilate_plus_shape():
    img = np.zeros((5, 5))
    img[2, 2] = 1.0
    out = dilate(img, DiskSE(1))
    expected = np.zeros((5, 5))
    for r, c in [(2, 2), (1, 2), (3, 2), (2, 1), (2, 3)]:
        expected[r, c] = 1.0
    np.testing.assert_array_equal(out, expected)
    # erosion of the complement mirrors it
    np.testing.assert_array_equal(erode(1.0 - img, DiskSE(1)), 1.0 - expected)


def test_erode_dilate_hand_enumeration():
    rng = np.random.default_rng(1)
    img = rng.random((5, 5))
    se = DiskSE(1)
    ero, dil = erode(img, se), dilate(img, se)
    for i in range(5):
        for j in range(5):
            vals = [
                img[i + dy, j + dx]
                for dy in (-1, 0, 1)
                for dx in (-1, 0, 1)
                if dy * dy + dx * dx <= 1 and 0 <= i + dy < 5 and 0 <= j + dx < 5
            ]
            assert ero[i, j] == min(vals)
            assert dil[i, j] == max(vals)


def test_reconstruct_marker_equals_mask():
    mask = np.random.default_rng(2).random((6, 6))
    np.testing.assert_array_equal(reconstruct_by_dilation(mask.copy(), mask), mask)


def test_reconstruct_global_min_marker_stays_flat():
    # a flat marker below a constant mask is already stable
    mask = np.full((4, 4), 3.0)
    marker = np.full((4, 4), 1.0)
    np.testing.assert_array_equal(reconstruct_by_dilation(marker, mask), marker)


def test_reconstruct_marker_above_mask_rejected():
    mask = np.zeros((3, 3))
    marker = np.zeros((3, 3))
    marker[1, 1] = 0.5
    with pytest.raises(ValueError):
        reconstruct_by_dilation(marker, mask)


def test_reconstruct_1d_ramp_flood():
    # single seed floods the connected plateau of a 9-pixel signal
    mask = np.array([[0.0, 1.0, 2.0, 3.0, 4.0, 3.0, 2.0, 1.0, 0.0]])
    marker = np.zeros_like(mask)
    marker[0, 4] = 4.0
    out = reconstruct_by_dilation(marker, mask)
    np.testing.assert_array_equal(out, brute_reconstruct(marker, mask))
    np.testing.assert_array_equal(out, mask)


def test_reconstruct_matches_brute_force_bitwise():
    rng = np.random.default_rng(3)
    for _ in range(20):
        mask = rng.random((12, 9))
        marker = erode(mask, DiskSE(int(rng.integers(1, 3))))
        out = reconstruct_by_dilation(marker, mask)
        assert np.array_equal(out, brute_reconstruct(marker, mask))


def test_opening_preserves_large_square_removes_small():
    img = np.zeros((16, 16))
    img[2:10, 2:10] = 1.0  # 8x8, contains a radius-2 disk
    opened = opening_by_reconstruction(img, DiskSE(2))
    np.testing.assert_array_equal(opened, img)

    small = np.zeros((16, 16))
    small[3:6, 3:6] = 1.0  # 3x3, no radius-2 disk fits
    np.testing.assert_array_equal(opening_by_reconstruction(small, DiskSE(2)), np.zeros((16, 16)))


def test_closing_fills_small_dark_spot():
    img = np.ones((12, 12))
    img[5:7, 5:7] = 0.0
    closed = closing_by_reconstruction(img, DiskSE(2))
    np.testing.assert_array_equal(closed, np.ones((12, 12)))


def test_morphology_axioms_random_images():
    rng = np.random.default_rng(4)
    radii = [1, 2, 4]
    for _ in range(50):
        img = rng.random((32, 32))
        prev_open, prev_close = None, None
        for radius in radii:
            se = DiskSE(radius)
            opened = opening_by_reconstruction(img, se)
            closed = closing_by_reconstruction(img, se)
            # anti-extensivity / extensivity
            assert np.all(opened <= img)
            assert np.all(closed >= img)
            # idempotence, exact
            assert np.array_equal(opening_by_reconstruction(opened, se), opened)
            assert np.array_equal(closing_by_reconstruction(closed, se), closed)
            # duality, bitwise
            assert np.array_equal(closed, -opening_by_reconstruction(-img, se))
            # ordering in the radius
            if prev_open is not None:
                assert np.all(opened <= prev_open)
                assert np.all(closed >= prev_close)
            prev_open, prev_close = opened, closed
