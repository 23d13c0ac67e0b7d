"""Full-reference image metrics: MSE and SSIM."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.ndimage import correlate1d

from .errors import InputError
from .types import Frame

WINDOW = 11
SIGMA = 1.5
K1, K2 = 0.01, 0.03


def _pixels(f):
    return f.pixels if isinstance(f, Frame) else np.asarray(f, dtype=np.float64)


def mse(a, b) -> float:
    a, b = _pixels(a), _pixels(b)
    if a.shape != b.shape:
        raise InputError(f"frame shapes differ: {a.shape} vs {b.shape}")
    d = a - b
    return float(np.mean(d * d))


def gaussian_window(size=WINDOW, sigma=SIGMA) -> np.ndarray:
    """1-D Gaussian taps normalized to sum to 1; the 2-D window is its outer product."""
    x = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return g / g.sum()


def _filter_valid(img, taps):
    # separable correlation, then crop to windows fully inside the image
    half = len(taps) // 2
    out = correlate1d(img, taps, axis=0, mode="constant")
    out = correlate1d(out, taps, axis=1, mode="constant")
    return out[half:img.shape[0] - half, half:img.shape[1] - half]


def ssim_map(a, b, data_range=1.0) -> np.ndarray:
    a, b = _pixels(a), _pixels(b)
    if a.shape != b.shape:
        raise InputError(f"frame shapes differ: {a.shape} vs {b.shape}")
    if a.ndim != 2 or min(a.shape) < WINDOW:
        raise InputError(f"SSIM needs frames of at least {WINDOW}x{WINDOW}, got {a.shape}")
    taps = gaussian_window()
    c1 = (K1 * data_range) ** 2
    c2 = (K2 * data_range) ** 2
    mu_a = _filter_valid(a, taps)
    mu_b = _filter_valid(b, taps)
    var_a = _filter_valid(a * a, taps) - mu_a * mu_a
    var_b = _filter_valid(b * b, taps) - mu_b * mu_b
    cov = _filter_valid(a * b, taps) - mu_a * mu_b
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return num / den


def ssim(a, b, data_range=1.0) -> float:
    """Mean SSIM over valid 11x11 Gaussian (sigma 1.5) windows."""
    return float(np.mean(ssim_map(a, b, data_range)))


@dataclass
class SequenceReport:
    mse: list[float] = field(default_factory=list)
    ssim: list[float] = field(default_factory=list)

    @property
    def mean_mse(self) -> float:
        return float(np.mean(self.mse))

    @property
    def mean_ssim(self) -> float:
        return float(np.mean(self.ssim))

    def rows(self):
        return list(zip(range(len(self.mse)), self.mse, self.ssim))

    def format_table(self, csv=False) -> str:
        if csv:
            lines = ["frame,mse,ssim"]
            lines += [f"{i},{m:.10g},{s:.10g}" for i, m, s in self.rows()]
            lines.append(f"mean,{self.mean_mse:.10g},{self.mean_ssim:.10g}")
        else:
            lines = [f"{'frame':>6} {'mse':>14} {'ssim':>12}"]
            lines += [f"{i:>6d} {m:>14.6e} {s:>12.6f}" for i, m, s in self.rows()]
            lines.append(f"mean_mse={self.mean_mse:.6e} mean_ssim={self.mean_ssim:.6f}")
        return "\n".join(lines)


def evaluate_sequence(recon: Sequence[Frame], truth: Sequence[Frame]) -> SequenceReport:
    if len(recon) != len(truth):
        raise InputError(f"sequence lengths differ: {len(recon)} vs {len(truth)}")
    if not recon:
        raise InputError("cannot evaluate empty sequences")
    report = SequenceReport()
    for r, t in zip(recon, truth):
        report.mse.append(mse(r, t))
        report.ssim.append(ssim(r, t))
    return report
