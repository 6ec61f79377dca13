import json
import math

import numpy as np
import pytest

from radarbev import imageio
from radarbev.errors import EmptyInputError, ShapeError
from radarbev.geometry import Pose
from radarbev.metrics import MetricReport, evaluate_pairs, psnr, rmi, ssim
from radarbev.pairing import PairManifest, PairRecord
from radarbev.projection import BevGridSpec


def psnr_oracle(a, b):
    """Scalar loops, no vectorization shared with the implementation."""
    h, w = a.shape
    total = 0.0
    for i in range(h):
        for j in range(w):
            d = float(a[i, j]) - float(b[i, j])
            total += d * d
    mse = total / (h * w)
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(255.0 * 255.0 / mse)


def ssim_oracle(a, b):
    """Direct sliding-window evaluation with an explicit Gaussian window."""
    size, sigma = 11, 1.5
    ax = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(ax**2) / (2 * sigma**2))
    win = np.outer(g, g)
    win /= win.sum()
    c1 = (0.01 * 255) ** 2
    c2 = (0.03 * 255) ** 2
    fa = a.astype(np.float64)
    fb = b.astype(np.float64)
    h, w = fa.shape
    vals = []
    for i in range(h - size + 1):
        for j in range(w - size + 1):
            wa = fa[i : i + size, j : j + size]
            wb = fb[i : i + size, j : j + size]
            mu_a = (win * wa).sum()
            mu_b = (win * wb).sum()
            va = (win * wa * wa).sum() - mu_a**2
            vb = (win * wb * wb).sum() - mu_b**2
            cov = (win * wa * wb).sum() - mu_a * mu_b
            vals.append(
                ((2 * mu_a * mu_b + c1) * (2 * cov + c2))
                / ((mu_a**2 + mu_b**2 + c1) * (va + vb + c2))
            )
    return float(np.mean(vals))


def hist_mi_oracle(a, b):
    """Joint-histogram mutual information in nats."""
    n = a.size
    joint = {}
    for x, y in zip(a.ravel().tolist(), b.ravel().tolist()):
        joint[(x, y)] = joint.get((x, y), 0) + 1
    pa, pb = {}, {}
    for (x, y), c in joint.items():
        pa[x] = pa.get(x, 0) + c
        pb[y] = pb.get(y, 0) + c
    mi = 0.0
    for (x, y), c in joint.items():
        pxy = c / n
        mi += pxy * math.log(pxy / (pa[x] / n * pb[y] / n))
    return mi


def random_pair(rng, side=64):
    a = rng.integers(0, 256, (side, side), dtype=np.uint8)
    b = rng.integers(0, 256, (side, side), dtype=np.uint8)
    return a, b


class TestPsnr:
    def test_identical_is_inf(self):
        a = np.full((32, 32), 7, dtype=np.uint8)
        assert psnr(a, a) == math.inf

    def test_black_vs_white_is_zero(self):
        a = np.zeros((32, 32), dtype=np.uint8)
        b = np.full((32, 32), 255, dtype=np.uint8)
        assert psnr(a, b) == 0.0

    def test_matches_scalar_oracle(self):
        rng = np.random.default_rng(71)
        for _ in range(5):
            a, b = random_pair(rng)
            assert abs(psnr(a, b) - psnr_oracle(a, b)) < 1e-9

    def test_symmetry(self):
        rng = np.random.default_rng(72)
        a, b = random_pair(rng)
        assert abs(psnr(a, b) - psnr(b, a)) < 1e-9

    def test_monotone_noise_ladder(self):
        rng = np.random.default_rng(73)
        a = rng.integers(60, 196, (64, 64)).astype(np.uint8)
        values = []
        for amp in (2, 6, 14, 30, 55):
            noise = rng.integers(-amp, amp + 1, a.shape)
            noisy = np.clip(a.astype(int) + noise, 0, 255).astype(np.uint8)
            values.append(psnr(a, noisy))
        assert all(x > y for x, y in zip(values, values[1:]))

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            psnr(np.zeros((4, 4), np.uint8), np.zeros((4, 5), np.uint8))


class TestSsim:
    def test_self_similarity(self):
        rng = np.random.default_rng(74)
        a, _ = random_pair(rng)
        assert abs(ssim(a, a) - 1.0) < 1e-12

    def test_constant_black_vs_white(self):
        a = np.zeros((32, 32), dtype=np.uint8)
        b = np.full((32, 32), 255, dtype=np.uint8)
        c1 = (0.01 * 255) ** 2
        want = c1 / (255.0**2 + c1)
        assert abs(ssim(a, b) - want) < 1e-12

    def test_matches_sliding_window_oracle(self):
        rng = np.random.default_rng(75)
        for _ in range(3):
            a, b = random_pair(rng)
            assert abs(ssim(a, b) - ssim_oracle(a, b)) < 1e-6

    def test_symmetry(self):
        rng = np.random.default_rng(76)
        a, b = random_pair(rng)
        assert abs(ssim(a, b) - ssim(b, a)) < 1e-9

    def test_bounded(self):
        rng = np.random.default_rng(77)
        for _ in range(5):
            a, b = random_pair(rng)
            assert -1.0 <= ssim(a, b) <= 1.0

    def test_too_small_rejected(self):
        a = np.zeros((10, 10), dtype=np.uint8)
        with pytest.raises(ShapeError):
            ssim(a, a)


class TestRmi:
    def test_self_maximality(self):
        rng = np.random.default_rng(78)
        a, b = random_pair(rng)
        assert rmi(a, a) >= rmi(a, b)
        assert rmi(a, a, radius=0) >= rmi(a, b, radius=0)

    def test_constant_vs_random_near_zero(self):
        rng = np.random.default_rng(79)
        a = np.full((32, 32), 100, dtype=np.uint8)
        b = rng.integers(0, 256, (32, 32), dtype=np.uint8)
        assert rmi(a, b) <= 1e-6

    def test_two_level_matches_histogram_oracle(self):
        rng = np.random.default_rng(9)
        a = (rng.random((16, 16)) < 0.5).astype(np.uint8) * 255
        flip = rng.random((16, 16)) < 0.35
        b = np.where(flip, 255 - a, a).astype(np.uint8)
        got = rmi(a, b, radius=0)
        want = hist_mi_oracle(a, b)
        assert abs(got - want) / want < 0.05

    def test_symmetry(self):
        rng = np.random.default_rng(80)
        a, b = random_pair(rng)
        assert abs(rmi(a, b) - rmi(b, a)) < 1e-9

    def test_non_negative(self):
        rng = np.random.default_rng(81)
        for _ in range(5):
            a, b = random_pair(rng)
            assert rmi(a, b) >= 0.0

    def test_affine_relabel_invariance(self):
        rng = np.random.default_rng(82)
        a = rng.integers(0, 256, (32, 32), dtype=np.uint8)
        b = rng.integers(0, 100, (32, 32), dtype=np.uint8)
        b2 = (2 * b.astype(np.int64) + 5).astype(np.uint8)  # exact affine relabel
        assert abs(rmi(a, b) - rmi(a, b2)) < 1e-6

    def test_shuffle_destroys_information(self):
        rng = np.random.default_rng(83)
        wins = 0
        for _ in range(20):
            a = rng.integers(0, 256, (24, 24), dtype=np.uint8)
            noise = rng.integers(-10, 11, a.shape)
            b = np.clip(a.astype(int) + noise, 0, 255).astype(np.uint8)
            shuffled = b.ravel().copy()
            rng.shuffle(shuffled)
            shuffled = shuffled.reshape(b.shape)
            if rmi(a, shuffled) < rmi(a, b):
                wins += 1
        assert wins > 10

    def test_bad_radius_and_epsilon(self):
        a = np.zeros((16, 16), dtype=np.uint8)
        with pytest.raises(ValueError):
            rmi(a, a, radius=-1)
        with pytest.raises(ValueError):
            rmi(a, a, epsilon=0.0)


class TestEvaluatePairs:
    def _dataset(self, tmp_path, n=5, degrade=False):
        grid = BevGridSpec(width_px=32, height_px=32, span_m=200.0)
        gt_dir = tmp_path / "gt"
        cand_dir = tmp_path / "cand"
        gt_dir.mkdir()
        cand_dir.mkdir()
        rng = np.random.default_rng(84)
        records = []
        images = []
        for i in range(n):
            ts = 1000 * (i + 1)
            img = rng.integers(0, 256, (32, 32), dtype=np.uint8)
            imageio.write_pgm(gt_dir / f"{ts}.pgm", img)
            if degrade:
                cand = np.clip(img.astype(int) + rng.integers(-20, 21, img.shape), 0, 255)
                cand = cand.astype(np.uint8)
            else:
                cand = img
            imageio.write_png(cand_dir / f"{ts}.png", cand)
            images.append((img, cand))
            records.append(
                PairRecord(
                    radar_path=f"radar/{ts}.png",
                    gt_path=f"gt/{ts}.pgm",
                    timestamp_ns=ts,
                    pose=Pose(ts, 0, 0, 0, 0, 0, 0),
                )
            )
        man = PairManifest(grid=grid, records=tuple(records), base_dir=tmp_path)
        return man, cand_dir, images

    def test_gt_as_candidate(self, tmp_path):
        man, cand_dir, _ = self._dataset(tmp_path)
        report = evaluate_pairs(man, cand_dir)
        assert report.psnr_inf_count == report.n_images == 5
        assert report.psnr_db == math.inf
        assert abs(report.ssim - 1.0) < 1e-12

    def test_arithmetic_mean_oracle(self, tmp_path):
        man, cand_dir, images = self._dataset(tmp_path, degrade=True)
        report = evaluate_pairs(man, cand_dir)
        psnrs = [psnr(g, c) for g, c in images]
        ssims = [ssim(g, c) for g, c in images]
        rmis = [rmi(g, c) for g, c in images]
        assert abs(report.psnr_db - np.mean(psnrs)) < 1e-9
        assert abs(report.ssim - np.mean(ssims)) < 1e-9
        assert abs(report.rmi - np.mean(rmis)) < 1e-9
        assert report.psnr_inf_count == 0

    def test_missing_candidates_listed(self, tmp_path):
        man, cand_dir, _ = self._dataset(tmp_path)
        (cand_dir / "1000.png").unlink()
        (cand_dir / "3000.png").unlink()
        with pytest.raises(EmptyInputError) as err:
            evaluate_pairs(man, cand_dir)
        assert "1000" in str(err.value) and "3000" in str(err.value)

    def test_split_filter(self, tmp_path):
        man, cand_dir, _ = self._dataset(tmp_path)
        with pytest.raises(EmptyInputError):
            evaluate_pairs(man, cand_dir, split="test")  # all records are train

    def test_report_json(self):
        report = MetricReport(n_images=3, psnr_db=30.0, ssim=0.5, rmi=0.1, psnr_inf_count=1)
        doc = json.loads(report.to_json())
        assert doc == {
            "n_images": 3,
            "psnr_db": 30.0,
            "ssim": 0.5,
            "rmi": 0.1,
            "psnr_inf_count": 1,
        }
        inf_doc = json.loads(
            MetricReport(n_images=1, psnr_db=math.inf, ssim=1.0, rmi=0.0, psnr_inf_count=1).to_json()
        )
        assert inf_doc["psnr_db"] == "inf"
