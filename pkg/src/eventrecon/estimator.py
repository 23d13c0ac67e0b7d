"""Estimate contrast thresholds and the intensity offset from frame pairs.

Every (pixel, interval) sample gives one regression row

    theta_pos * E+ - theta_neg * E- = log((f1 + k) / (f0 + k))

which is linear in the thresholds once ``k`` is fixed. Thresholds are
therefore solved in closed form for each candidate ``k``, and ``k`` is
found by a log-spaced grid scan refined with golden-section search.

The k search minimises ``relative_rms`` (residual RMS over target RMS),
not the raw log residual: every target shrinks towards zero as k grows,
so the raw residual decreases monotonically in k and carries no
information about where the linear relation actually holds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InputError, WellPosednessError
from .reconstructor import count_events
from .types import CameraParams, EventStream, Frame

PARAM_FLOOR = 1e-4
GRID_POINTS = 64
GOLDEN_REL_WIDTH = 1e-4
WELL_POSED = "well-posed"
FALLBACK = "rank-deficient-fallback"

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True, eq=False)
class ObservationSet:
    e_pos: np.ndarray
    e_neg: np.ndarray
    f0: np.ndarray
    f1: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        arrays = []
        for name, dtype in (("e_pos", np.float64), ("e_neg", np.float64), ("f0", np.float64), ("f1", np.float64)):
            a = np.array(getattr(self, name), dtype=dtype, copy=True).ravel()
            a.setflags(write=False)
            object.__setattr__(self, name, a)
            arrays.append(a)
        if len({len(a) for a in arrays}) != 1:
            raise InputError("observation columns differ in length")
        if (self.e_pos < 0).any() or (self.e_neg < 0).any():
            raise InputError("event counts must be non-negative")
        for a in (self.f0, self.f1):
            if not np.all(np.isfinite(a)) or (a < 0).any() or (a > 1).any():
                raise InputError("intensities must lie in [0, 1]")

    def __len__(self):
        return len(self.e_pos)

    def __eq__(self, other):
        if not isinstance(other, ObservationSet):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, n), getattr(other, n)) for n in ("e_pos", "e_neg", "f0", "f1")
        )

    def targets(self, k: float) -> np.ndarray:
        """Observed log ratio ``log((f1 + k) / (f0 + k))`` per row."""
        return np.log(self.f1 + k) - np.log(self.f0 + k)

    @property
    def has_events(self) -> bool:
        return bool((self.e_pos > 0).any() or (self.e_neg > 0).any())


@dataclass(frozen=True)
class FitResult:
    params: CameraParams
    residual_rms: float
    rows_used: int
    condition_flag: str = WELL_POSED
    relative_rms: float = 0.0

    def format_line(self) -> str:
        p = self.params
        return (
            f"theta_pos={p.theta_pos:.9g} theta_neg={p.theta_neg:.9g} k={p.k:.9g} "
            f"residual_rms={self.residual_rms:.9g} rows={self.rows_used} flag={self.condition_flag}"
        )


def build_observations(
    frames: Sequence[Frame], stream: EventStream, max_rows: int = 200_000, seed: int = 0
) -> ObservationSet:
    """One row per pixel and consecutive frame pair.

    When the rows exceed ``max_rows`` they are subsampled with ``seed``:
    rows with events are kept first, and zero-count rows fill the rest of
    the budget up to at most half of the sample.
    """
    if len(frames) < 2:
        raise InputError("need at least two frames to build observations")
    if max_rows < 1:
        raise InputError("max_rows must be positive")
    e_pos, e_neg, f0, f1 = [], [], [], []
    for a, b in zip(frames, frames[1:]):
        if a.shape != (stream.height, stream.width) or b.shape != a.shape:
            raise InputError("frame size does not match the event sensor size")
        c = count_events(stream, a.t, b.t)
        e_pos.append(c.pos.ravel())
        e_neg.append(c.neg.ravel())
        f0.append(a.pixels.ravel())
        f1.append(b.pixels.ravel())
    e_pos, e_neg = np.concatenate(e_pos), np.concatenate(e_neg)
    f0, f1 = np.concatenate(f0), np.concatenate(f1)
    total = len(e_pos)
    active = (e_pos > 0) | (e_neg > 0)
    n_active = int(active.sum())
    meta = {"policy": "all", "seed": seed, "total_rows": total, "active_rows": n_active}
    if total > max_rows:
        rng = np.random.default_rng(seed)
        nz = np.flatnonzero(active)
        z = np.flatnonzero(~active)
        if len(nz) >= max_rows:
            keep = rng.choice(nz, size=max_rows, replace=False)
        else:
            n_zero = min(len(z), max_rows - len(nz), len(nz))
            keep = np.concatenate([nz, rng.choice(z, size=n_zero, replace=False)])
        keep.sort()
        e_pos, e_neg, f0, f1 = e_pos[keep], e_neg[keep], f0[keep], f1[keep]
        meta.update(policy="subsampled", kept_rows=len(keep), kept_zero_rows=int(len(keep) - min(len(nz), max_rows)))
    return ObservationSet(e_pos, e_neg, f0, f1, meta)


def _residuals(obs, theta_pos, theta_neg, y):
    return theta_pos * obs.e_pos - theta_neg * obs.e_neg - y


def _rms(r):
    return float(np.sqrt(np.mean(r * r))) if len(r) else 0.0


def fit_thresholds_given_k(obs: ObservationSet, k: float) -> FitResult:
    """Closed-form least squares for (theta_pos, theta_neg) at fixed ``k``.

    Non-positive or unidentifiable parameters are pinned at ``PARAM_FLOOR``
    and the other one is refit; such results carry the fallback flag.
    """
    if not k > 0:
        raise InputError(f"k must be > 0, got {k!r}")
    if not obs.has_events:
        raise WellPosednessError("all event counts are zero; thresholds are not identifiable")
    y = obs.targets(k)
    P, N = obs.e_pos, obs.e_neg
    spp = float(P @ P)
    snn = float(N @ N)
    spn = float(P @ N)
    spy = float(P @ y)
    sny = float(N @ y)

    def only_pos(theta_neg):
        # minimise sum (tp*P - tn*N - y)^2 over tp with tn fixed
        return (spy + theta_neg * spn) / spp

    def only_neg(theta_pos):
        return (theta_pos * spn - sny) / snn

    flag = WELL_POSED
    det = spp * snn - spn * spn
    if spp > 0 and snn > 0 and det > 1e-12 * spp * snn:
        # normal equations of the design [P, -N]
        tp = (snn * spy - spn * sny) / det
        tn = (spn * spy - spp * sny) / det
        if tp <= 0:
            flag, tp = FALLBACK, PARAM_FLOOR
            tn = only_neg(tp)
        elif tn <= 0:
            flag, tn = FALLBACK, PARAM_FLOOR
            tp = only_pos(tn)
    else:
        flag = FALLBACK
        if spp >= snn:
            tn = PARAM_FLOOR
            tp = only_pos(tn)
        else:
            tp = PARAM_FLOOR
            tn = only_neg(tp)
    tp = max(tp, PARAM_FLOOR)
    tn = max(tn, PARAM_FLOOR)
    if tp == PARAM_FLOOR or tn == PARAM_FLOOR:
        flag = FALLBACK
    rms = _rms(_residuals(obs, tp, tn, y))
    scale = _rms(y)
    relative = rms / scale if scale > 0 else (0.0 if rms == 0 else math.inf)
    return FitResult(CameraParams(tp, tn, k), rms, len(obs), flag, relative)


def golden_section_min(f, a, b, rel_tol=GOLDEN_REL_WIDTH, max_iter=200):
    """Minimise a unimodal ``f`` on [a, b]; return ``(x, f(x))`` of the best probe."""
    a, b = min(a, b), max(a, b)
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    best = min((fc, c), (fd, d))
    for _ in range(max_iter):
        if b - a <= rel_tol * 0.5 * (a + b):
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
            best = min(best, (fc, c))
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
            best = min(best, (fd, d))
    return best[1], best[0]


def fit_all(obs: ObservationSet, k_range=(1e-3, 1.0), grid_points=GRID_POINTS) -> FitResult:
    """Estimate (theta_pos, theta_neg, k): closed-form thresholds inside a 1-D search over k."""
    k_lo, k_hi = (float(v) for v in k_range)
    if not (0 < k_lo <= k_hi and math.isfinite(k_hi)):
        raise InputError(f"k range must satisfy 0 < k_lo <= k_hi, got {k_range!r}")
    if k_lo == k_hi:
        return fit_thresholds_given_k(obs, k_lo)

    cache = {}

    def fit(k):
        if k not in cache:
            cache[k] = fit_thresholds_given_k(obs, k)
        return cache[k]

    grid = np.geomspace(k_lo, k_hi, grid_points)
    scores = [fit(float(k)).relative_rms for k in grid]
    j = int(np.argmin(scores))
    lo = float(grid[max(j - 1, 0)])
    hi = float(grid[min(j + 1, len(grid) - 1)])
    golden_section_min(lambda k: fit(k).relative_rms, lo, hi)
    return min(cache.values(), key=lambda r: r.relative_rms)


def objective(obs: ObservationSet, theta_pos: float, theta_neg: float, k: float) -> float:
    """Sum of squared log-domain residuals."""
    r = _residuals(obs, theta_pos, theta_neg, obs.targets(k))
    return float(r @ r)


def objective_gradient(obs: ObservationSet, theta_pos: float, theta_neg: float, k: float) -> np.ndarray:
    r = _residuals(obs, theta_pos, theta_neg, obs.targets(k))
    return np.array([2.0 * float(obs.e_pos @ r), -2.0 * float(obs.e_neg @ r)])


def objective_gradient_check(obs: ObservationSet, params: CameraParams, h: float = 1e-6) -> float:
    """Largest gap between analytic and central-difference gradients.

    The gap is relative to the larger gradient norm; identical zero
    gradients give 0.
    """
    if not h > 0:
        raise InputError("finite-difference step must be > 0")
    tp, tn, k = params.theta_pos, params.theta_neg, params.k
    analytic = objective_gradient(obs, tp, tn, k)
    numeric = np.array([
        (objective(obs, tp + h, tn, k) - objective(obs, tp - h, tn, k)) / (2 * h),
        (objective(obs, tp, tn + h, k) - objective(obs, tp, tn - h, k)) / (2 * h),
    ])
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric))
    if scale == 0:
        return 0.0
    return float(np.max(np.abs(analytic - numeric)) / scale)
