import math

import numpy as np
import pytest

from scatterscene import metrics
from scatterscene.colorspace import luma, rgb_to_lab
from scatterscene.errors import ShapeMismatchError, TooSmallError
from scatterscene.metrics import SsimConfig, psnr, ssim, uciqe, uiqm


class TestPsnr:
    def test_identical_is_capped(self, rng):
        a = rng.random((16, 16, 3))
        assert psnr(a, a) == 99.0

    def test_uniform_offset_is_20db(self, rng):
        a = rng.random((16, 16, 3)) * 0.5
        assert psnr(a, a + 0.1) == pytest.approx(20.0, abs=1e-9)

    def test_matches_scalar_loop_oracle(self, rng):
        a = rng.random((8, 8, 3))
        b = rng.random((8, 8, 3))
        total = 0.0
        for y in range(8):
            for x in range(8):
                for c in range(3):
                    total += (a[y, x, c] - b[y, x, c]) ** 2
        mse = total / (8 * 8 * 3)
        assert psnr(a, b) == pytest.approx(10 * math.log10(1 / mse), abs=1e-9)

    def test_symmetry_and_noise_monotonic(self, rng):
        ref = rng.random((24, 24, 3))
        noise = rng.standard_normal(ref.shape)
        values = [psnr(ref, ref + amp * noise) for amp in (0.01, 0.05, 0.2)]
        assert values[0] > values[1] > values[2]
        assert psnr(ref, ref + 0.1 * noise) == psnr(ref + 0.1 * noise, ref)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            psnr(np.zeros((4, 4, 3)), np.zeros((5, 4, 3)))


class TestSsim:
    def test_self_similarity_is_one(self, rng):
        a = rng.random((32, 32, 3))
        assert ssim(a, a) == pytest.approx(1.0, abs=1e-9)

    def test_constant_pair_hand_value(self):
        a = np.full((16, 16, 3), 0.3)
        b = np.full((16, 16, 3), 0.7)
        c1 = 1e-4
        expected = (2 * 0.3 * 0.7 + c1) / (0.3**2 + 0.7**2 + c1)
        assert ssim(a, b) == pytest.approx(expected, abs=1e-4)

    def test_symmetry(self, rng):
        for _ in range(5):
            a = rng.random((20, 20, 3))
            b = rng.random((20, 20, 3))
            assert abs(ssim(a, b) - ssim(b, a)) <= 1e-12

    def test_bounded_and_shift_invariant(self, rng):
        # perturb with a zero-local-mean pattern: variance/covariance change
        # but the window means track each other, so a common shift cancels
        a = rng.random((24, 24, 3)) * 0.5 + 0.15
        board = np.where((np.indices((24, 24)).sum(0) % 2) == 0, 1.0, -1.0)
        b = a + 0.04 * board[..., None]
        val = ssim(a, b)
        assert -1.0 <= val <= 1.0
        assert ssim(a + 0.2, b + 0.2) == pytest.approx(val, abs=1e-6)

    def test_too_small_raises(self):
        with pytest.raises(TooSmallError):
            ssim(np.zeros((8, 8, 3)), np.zeros((8, 8, 3)))

    def test_global_mode_matches_direct_formula(self, rng):
        a = rng.random((16, 16, 3))
        b = rng.random((16, 16, 3))
        x, y = luma(a), luma(b)
        c1, c2 = 1e-4, 9e-4
        expected = ((2 * x.mean() * y.mean() + c1) * (2 * ((x - x.mean()) * (y - y.mean())).mean() + c2)) / (
            (x.mean() ** 2 + y.mean() ** 2 + c1) * (x.var() + y.var() + c2)
        )
        assert ssim(a, b, global_stats=True) == pytest.approx(expected, abs=1e-12)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SsimConfig(k1=0.0)
        with pytest.raises(ValueError):
            SsimConfig(window=4)


class TestUciqe:
    def test_gray_image_is_zero(self):
        for v in (0.0, 0.37, 1.0):
            assert uciqe(np.full((16, 16, 3), v)) == pytest.approx(0.0, abs=1e-12)

    def test_black_white_contrast_dominates(self):
        img = np.zeros((32, 32, 3))
        img[:, 16:] = 1.0
        val = uciqe(img)
        assert val == pytest.approx(0.2745, abs=1e-6)

    def test_matches_component_oracle(self, rng):
        img = rng.random((24, 24, 3))
        lab = rgb_to_lab(img)
        lum = lab[..., 0] / 100.0
        chroma = np.sqrt(lab[..., 1] ** 2 + lab[..., 2] ** 2) / 100.0
        sigma_c = chroma.std()
        con = np.percentile(lum, 99) - np.percentile(lum, 1)
        sats = [c / l if l > 0 else 0.0 for c, l in zip(chroma.ravel(), lum.ravel())]
        expected = 0.4680 * sigma_c + 0.2745 * con + 0.2576 * float(np.mean(sats))
        assert uciqe(img) == pytest.approx(expected, abs=1e-9)

    def test_flip_invariance(self, rng):
        img = rng.random((64, 64, 3))
        assert uciqe(img[:, ::-1]) == pytest.approx(uciqe(img), abs=1e-9)
        assert uciqe(img[::-1, :]) == pytest.approx(uciqe(img), abs=1e-9)


def _uiqm_oracle(img: np.ndarray) -> float:
    """Literal blockwise scalar reimplementation of the UIQM pipeline."""
    x = img.astype(np.float64) * 255.0
    r, g, b = x[..., 0], x[..., 1], x[..., 2]

    def trimmed(vals):
        v = np.sort(vals.ravel())
        t = int(0.1 * v.size)
        core = v[t : v.size - t]
        mu = core.mean()
        return mu, np.mean((core - mu) ** 2)

    mu_rg, var_rg = trimmed(r - g)
    mu_yb, var_yb = trimmed((r + g) / 2 - b)
    uicm = -0.0268 * math.hypot(mu_rg, mu_yb) + 0.1586 * math.sqrt(var_rg + var_yb)

    def sobel_mag(ch):
        pad = np.pad(ch, 1, mode="symmetric")  # edge-inclusive reflection
        gx = np.zeros_like(ch)
        gy = np.zeros_like(ch)
        kx = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=float)
        for y in range(ch.shape[0]):
            for xx in range(ch.shape[1]):
                win = pad[y : y + 3, xx : xx + 3]
                gx[y, xx] = (win * kx).sum()
                gy[y, xx] = (win * kx.T).sum()
        return np.hypot(gx, gy)

    def eme(ch, size=8):
        h, w = ch.shape
        total, count = 0.0, 0
        for i in range(math.ceil(h / size)):
            for j in range(math.ceil(w / size)):
                blk = ch[i * size : (i + 1) * size, j * size : (j + 1) * size]
                mx = max(blk.max(), 1.0)
                mn = max(blk.min(), 1.0)
                total += math.log(mx / mn)
                count += 1
        return 2.0 / count * total

    uism = sum(
        wgt * eme(ch * sobel_mag(ch))
        for wgt, ch in zip((0.299, 0.587, 0.114), (r, g, b))
    )

    gray = 0.299 * r + 0.587 * g + 0.114 * b
    gamma = 1026.0
    s, count = 0.0, 0
    h, w = gray.shape
    for i in range(math.ceil(h / 8)):
        for j in range(math.ceil(w / 8)):
            blk = gray[i * 8 : (i + 1) * 8, j * 8 : (j + 1) * 8]
            mx, mn = float(blk.max()), float(blk.min())
            bottom = mx + mn - mx * mn / gamma
            m = (gamma * (mx - mn) / (gamma - mn)) / bottom if bottom != 0 else 0.0
            if m > 0:
                s += m * math.log(m)
            count += 1
    uiconm = gamma - gamma * (1.0 - s / gamma) ** (1.0 / count)

    return 0.0282 * uicm + 0.2953 * uism + 3.5753 * uiconm


class TestUiqm:
    def test_constant_image_is_zero(self):
        for v in (0.0, 0.42, 1.0):
            assert uiqm(np.full((16, 16, 3), v)) == pytest.approx(0.0, abs=1e-12)

    def test_sharp_beats_blurred(self):
        from scipy.ndimage import gaussian_filter

        board = ((np.indices((64, 64)).sum(0) // 4) % 2).astype(np.float64)
        img = np.stack([board, 1 - board, board * 0.5], axis=-1)
        blurred = gaussian_filter(img, sigma=(2.0, 2.0, 0.0))
        assert uiqm(img) > uiqm(blurred)

    def test_matches_blockwise_oracle(self, rng):
        img = rng.random((24, 24, 3))
        assert uiqm(img) == pytest.approx(_uiqm_oracle(img), abs=1e-6)

    def test_flip_invariance(self, rng):
        img = rng.random((64, 64, 3))
        assert uiqm(img[:, ::-1]) == pytest.approx(uiqm(img), abs=1e-9)
        assert uiqm(img[::-1, :]) == pytest.approx(uiqm(img), abs=1e-9)


def test_metric_metadata_documents_choices():
    meta = metrics.metric_metadata()
    assert "uciqe_colorspace" in meta and "uiqm_block_size" in meta
