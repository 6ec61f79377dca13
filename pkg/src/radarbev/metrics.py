"""Image-quality metrics for BEV image pairs: PSNR, SSIM, regional MI.

All three take 8-bit grayscale arrays of identical shape. PSNR and SSIM
use the conventional dynamic range L = 255. Regional mutual information
models the joint distribution of small neighborhoods as a Gaussian and
measures entropy overlap in nats.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import correlate

from . import imageio
from .errors import EmptyInputError, ShapeError
from .pairing import PairManifest

L_MAX = 255.0
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
RMI_RADIUS = 3
RMI_EPSILON = 1e-8


def _check_pair(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"images must be 2-D, got {a.shape} and {b.shape}")
    if a.shape != b.shape:
        raise ShapeError(f"image shapes differ: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise ShapeError("images are empty")
    return a.astype(np.float64), b.astype(np.float64)


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB; identical images give +inf."""
    fa, fb = _check_pair(a, b)
    mse = float(np.mean((fa - fb) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(L_MAX * L_MAX / mse)


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    ax = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(ax**2) / (2.0 * sigma**2))
    w = np.outer(g, g)
    return w / w.sum()


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Mean structural similarity over valid 11x11 Gaussian windows."""
    fa, fb = _check_pair(a, b)
    if min(fa.shape) < SSIM_WINDOW:
        raise ShapeError(
            f"images must be at least {SSIM_WINDOW}x{SSIM_WINDOW} for SSIM, got {fa.shape}"
        )
    w = _gaussian_window(SSIM_WINDOW, SSIM_SIGMA)
    c1 = (SSIM_K1 * L_MAX) ** 2
    c2 = (SSIM_K2 * L_MAX) ** 2

    def win(x):
        return correlate(x, w, mode="valid", method="direct")

    mu_a = win(fa)
    mu_b = win(fb)
    # weighted second moments; variance = E[x^2] - mu^2
    var_a = win(fa * fa) - mu_a**2
    var_b = win(fb * fb) - mu_b**2
    cov = win(fa * fb) - mu_a * mu_b
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def _region_stack(img: np.ndarray, radius: int) -> np.ndarray:
    """(d, M) matrix of all (2r+1)^2 neighborhoods of interior pixels."""
    size = 2 * radius + 1
    h, w = img.shape
    rows = []
    for dy in range(size):
        for dx in range(size):
            rows.append(img[dy : dy + h - size + 1, dx : dx + w - size + 1].ravel())
    return np.asarray(rows, dtype=np.float64)


def _gaussian_entropy(cov: np.ndarray, eps: float) -> float:
    d = cov.shape[0]
    reg = cov + eps * np.eye(d)
    sign, logdet = np.linalg.slogdet(reg)
    if sign <= 0:
        raise ValueError("covariance regularization failed, non-positive determinant")
    return 0.5 * (d * math.log(2.0 * math.pi * math.e) + logdet)


def rmi(
    a: np.ndarray, b: np.ndarray, radius: int = RMI_RADIUS, epsilon: float = RMI_EPSILON
) -> float:
    """Regional mutual information in nats, under a Gaussian region model.

    Each interior pixel contributes its (2r+1)^2 neighborhood from both
    images; the stacked vectors' covariance feeds H(A) + H(B) - H(A,B),
    each entropy regularized with epsilon * I. Clamped at zero. The value
    is invariant to relabeling gray levels by any affine map (up to the
    epsilon floor).
    """
    fa, fb = _check_pair(a, b)
    if radius < 0:
        raise ValueError(f"radius must be non-negative, got {radius}")
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    size = 2 * radius + 1
    if min(fa.shape) < size:
        raise ShapeError(f"images must be at least {size}x{size} for radius {radius}")
    sa = _region_stack(fa, radius)
    sb = _region_stack(fb, radius)
    joint = np.vstack([sa, sb])
    m = joint.shape[1]
    if m < 2:
        raise ShapeError("not enough interior pixels for a covariance estimate")
    mean = joint.mean(axis=1, keepdims=True)
    centered = joint - mean
    cov = centered @ centered.T / m
    d = sa.shape[0]
    h_a = _gaussian_entropy(cov[:d, :d], epsilon)
    h_b = _gaussian_entropy(cov[d:, d:], epsilon)
    h_ab = _gaussian_entropy(cov, epsilon)
    return max(0.0, h_a + h_b - h_ab)


@dataclass(frozen=True)
class MetricReport:
    """Arithmetic-mean metrics over a set of evaluated pairs."""

    n_images: int
    psnr_db: float
    ssim: float
    rmi: float
    psnr_inf_count: int = 0

    def to_json(self) -> str:
        return json.dumps(
            {
                "n_images": self.n_images,
                "psnr_db": "inf" if math.isinf(self.psnr_db) else self.psnr_db,
                "ssim": self.ssim,
                "rmi": self.rmi,
                "psnr_inf_count": self.psnr_inf_count,
            },
            sort_keys=True,
        )


def _find_candidate(candidate_dir: Path, stem: str) -> Path | None:
    for ext in (".png", ".pgm"):
        p = candidate_dir / (stem + ext)
        if p.is_file():
            return p
    return None


def evaluate_pairs(
    manifest: PairManifest,
    candidate_dir,
    split: str | None = None,
) -> MetricReport:
    """Score candidate images against manifest ground truth.

    Candidates are matched by ground-truth file stem: for ``gt/123.pgm``
    the candidate may be ``123.png`` or ``123.pgm`` under candidate_dir.
    Identical pairs yield +inf PSNR; those are excluded from the PSNR
    mean and tallied in psnr_inf_count.
    """
    candidate_dir = Path(candidate_dir)
    records = [r for r in manifest.records if split is None or r.split == split]
    if not records:
        raise EmptyInputError("no records to evaluate" + (f" in split {split!r}" if split else ""))
    missing = [
        Path(r.gt_path).stem
        for r in records
        if _find_candidate(candidate_dir, Path(r.gt_path).stem) is None
    ]
    if missing:
        raise EmptyInputError(
            f"missing candidate images under {candidate_dir}: " + ", ".join(missing)
        )
    psnrs = []
    ssims = []
    rmis = []
    inf_count = 0
    for rec in records:
        gt = imageio.read_image(manifest.resolve(rec.gt_path))
        cand = imageio.read_image(_find_candidate(candidate_dir, Path(rec.gt_path).stem))
        if cand.shape != gt.shape:
            cand = imageio.resize_bilinear(cand, gt.shape[1], gt.shape[0])
        p_val = psnr(gt, cand)
        if math.isinf(p_val):
            inf_count += 1
        else:
            psnrs.append(p_val)
        ssims.append(ssim(gt, cand))
        rmis.append(rmi(gt, cand))
    return MetricReport(
        n_images=len(records),
        psnr_db=float(np.mean(psnrs)) if psnrs else math.inf,
        ssim=float(np.mean(ssims)),
        rmi=float(np.mean(rmis)),
        psnr_inf_count=inf_count,
    )
