import numpy as np
import pytest

from kerndiv import (
    FEATURE_NAMES,
    Glcm,
    GrayImage,
    InputError,
    glcm,
    haralick_features,
    load_gray_image,
    normalize_corpus,
    threshold_mask,
)

import oracles


class TestThresholdMask:
    def test_percentile_zero_keeps_everything(self):
        img = GrayImage(np.arange(16, dtype=float).reshape(4, 4))
        assert threshold_mask(img, 0.0).all()

    def test_constant_image_excludes_everything(self):
        img = GrayImage(np.full((4, 4), 7.0))
        with pytest.raises(InputError, match="all pixels excluded"):
            threshold_mask(img, 5.0)

    def test_ramp_order_statistic(self):
        # 100 values 0..99: the 5th percentile interpolates to 4.95,
        # so the 95 pixels with value >= 5 survive
        img = GrayImage(np.arange(100, dtype=float).reshape(10, 10))
        mask = threshold_mask(img, 5.0)
        assert mask.sum() == 95
        assert not mask.ravel()[:5].any()

    def test_invalid_percentile(self):
        img = GrayImage(np.zeros((2, 2)))
        with pytest.raises(InputError):
            threshold_mask(img, 101.0)


class TestGlcm:
    def test_constant_image_all_mass_at_origin(self):
        g = glcm(GrayImage(np.full((2, 2), 3.0)), levels=64)
        assert g.p[0, 0] == 1.0
        assert g.p.sum() == 1.0

    def test_two_pixel_image_symmetric_accumulation(self):
        g = glcm(GrayImage(np.array([[1.0], [5.0]])), levels=2)
        np.testing.assert_allclose(g.p, [[0.0, 0.5], [0.5, 0.0]])

    def test_checkerboard_off_diagonal_fraction(self):
        board = np.indices((4, 4)).sum(axis=0) % 2
        g = glcm(GrayImage(board.astype(float)), levels=2)
        # horizontal + vertical pairs are opposite colors, diagonals equal:
        # 2*(12+12) of 2*(12+12+9+9) counts off-diagonal
        off_diag = g.p.sum() - np.trace(g.p)
        assert off_diag == pytest.approx(4.0 / 7.0)
        np.testing.assert_allclose(g.p, oracles.brute_glcm(board, levels=2))

    def test_matches_brute_force_enumeration(self):
        rng = np.random.default_rng(0)
        for _ in range(25):
            h, w = int(rng.integers(2, 9)), int(rng.integers(2, 9))
            img = rng.integers(0, 4, size=(h, w)).astype(float)
            if img.max() == img.min():
                continue
            mask = rng.random(size=(h, w)) > 0.2
            if not mask.any():
                continue
            try:
                mine = glcm(GrayImage(img), mask=mask, levels=4)
            except InputError:
                continue  # no valid pair survived the mask
            np.testing.assert_array_equal(mine.p, oracles.brute_glcm(img, mask, levels=4))

    def test_shift_invariance(self):
        rng = np.random.default_rng(1)
        img = rng.integers(0, 32, size=(6, 6)).astype(float)
        base = glcm(GrayImage(img), levels=8)
        shifted = glcm(GrayImage(img + 1000.0), levels=8)
        np.testing.assert_array_equal(base.p, shifted.p)

    def test_mask_shape_mismatch(self):
        with pytest.raises(InputError):
            glcm(GrayImage(np.zeros((3, 3))), mask=np.ones((2, 2), dtype=bool))

    def test_mask_without_pairs(self):
        # two surviving pixels with no unit offset connecting them
        mask = np.zeros((3, 3), dtype=bool)
        mask[0, 0] = True
        mask[0, 2] = True
        with pytest.raises(InputError):
            glcm(GrayImage(np.arange(9, dtype=float).reshape(3, 3)), mask=mask)


class TestHaralickFeatures:
    def test_point_mass(self):
        g = Glcm(np.array([[1.0, 0.0], [0.0, 0.0]]))
        f = dict(zip(FEATURE_NAMES, haralick_features(g)))
        assert f["f12_joint_entropy"] == 0.0
        assert f["f06_contrast"] == 0.0
        assert f["f24_joint_maximum"] == 1.0
        assert f["f11_joint_energy"] == 1.0
        assert f["f07_correlation"] == 0.0  # degenerate variance convention

    def test_uniform_glcm(self):
        n = 64
        g = Glcm(np.full((n, n), 1.0 / n**2))
        f = dict(zip(FEATURE_NAMES, haralick_features(g)))
        assert f["f12_joint_entropy"] == pytest.approx(12.0)
        assert f["f24_joint_maximum"] == pytest.approx(n**-2.0)

    def test_hand_built_two_level_support(self):
        g = Glcm(np.array([[0.4, 0.1], [0.1, 0.4]]))
        f = dict(zip(FEATURE_NAMES, haralick_features(g)))
        assert f["f06_contrast"] == pytest.approx(0.2)
        assert f["f09_dissimilarity"] == pytest.approx(0.2)
        assert f["f11_joint_energy"] == pytest.approx(0.34)

    def test_permutation_invariant_features(self):
        rng = np.random.default_rng(2)
        raw = rng.random(size=(5, 5))
        p = raw + raw.T
        p /= p.sum()
        perm = rng.permutation(5)
        base = dict(zip(FEATURE_NAMES, haralick_features(Glcm(p))))
        permuted = dict(
            zip(FEATURE_NAMES, haralick_features(Glcm(p[np.ix_(perm, perm)])))
        )
        for name in ("f12_joint_entropy", "f11_joint_energy", "f24_joint_maximum"):
            assert base[name] == pytest.approx(permuted[name])

    def test_total_function_on_random_glcms(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            raw = rng.random(size=(8, 8))
            p = raw + raw.T
            p /= p.sum()
            values = haralick_features(Glcm(p))
            assert values.shape == (25,)
            assert np.all(np.isfinite(values))


class TestNormalizeCorpus:
    def test_single_row_maps_to_zero(self):
        np.testing.assert_array_equal(
            normalize_corpus([[3.0, -1.0, 0.5]]), [[0.0, 0.0, 0.0]]
        )

    def test_two_rows(self):
        out = normalize_corpus([[1.0, 5.0, 2.0], [3.0, 5.0, 0.0]])
        np.testing.assert_array_equal(out, [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])

    def test_three_values(self):
        out = normalize_corpus([[1.0], [2.0], [4.0]])
        np.testing.assert_allclose(out[:, 0], [0.0, 1.0 / 3.0, 1.0])

    def test_idempotent(self):
        rng = np.random.default_rng(4)
        rows = rng.random(size=(7, 25))
        once = normalize_corpus(rows)
        np.testing.assert_array_equal(normalize_corpus(once), once)


class TestImageIo:
    def test_png_round_trip_8bit(self, tmp_path):
        from PIL import Image

        rng = np.random.default_rng(5)
        arr = rng.integers(0, 256, size=(12, 9)).astype(np.uint8)
        path = tmp_path / "toy.png"
        Image.fromarray(arr, mode="L").save(path)
        img = load_gray_image(path)
        assert img.id == "toy"
        np.testing.assert_array_equal(img.pixels, arr.astype(float))

    def test_png_round_trip_16bit(self, tmp_path):
        from PIL import Image

        rng = np.random.default_rng(6)
        arr = rng.integers(0, 65536, size=(8, 8)).astype(np.uint16)
        path = tmp_path / "deep.png"
        Image.fromarray(arr).save(path)
        img = load_gray_image(path)
        np.testing.assert_array_equal(img.pixels, arr.astype(float))

    def test_rgb_rejected(self, tmp_path):
        from PIL import Image

        arr = np.zeros((4, 4, 3), dtype=np.uint8)
        path = tmp_path / "color.png"
        Image.fromarray(arr, mode="RGB").save(path)
        with pytest.raises(InputError, match="grayscale"):
            load_gray_image(path)

    def test_csv_grid(self, tmp_path):
        path = tmp_path / "grid.csv"
        path.write_text("1,2\n3,4\n")
        img = load_gray_image(path)
        np.testing.assert_array_equal(img.pixels, [[1.0, 2.0], [3.0, 4.0]])

    def test_unsupported_format(self, tmp_path):
        path = tmp_path / "img.tiff"
        path.write_text("x")
        with pytest.raises(InputError, match="unsupported"):
            load_gray_image(path)


class TestGrayImage:
    def test_single_pixel_rejected(self):
        with pytest.raises(InputError):
            GrayImage(np.zeros((1, 1)))

    def test_nonfinite_rejected(self):
        with pytest.raises(InputError):
            GrayImage(np.array([[1.0, np.nan], [0.0, 0.0]]))
