"""Event simulation from frame sequences by log-intensity threshold crossing.

Between consecutive frames each pixel's log intensity ``log(f + k)`` is
interpolated linearly in time. Whenever it moves a full threshold away from
the pixel's reference level an event is emitted at the (floored)
crossing time and the reference steps by exactly that threshold. The
reference is kept as ``start + theta_pos * n_pos - theta_neg * n_neg`` so
the summed event deltas always equal the reference displacement.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _backend
from .errors import InputError
from .types import CameraParams, EventStream, Frame

log = logging.getLogger(__name__)

MIN_SAMPLED_THRESHOLD = 0.01


def log_intensity(frame: Frame, k: float) -> np.ndarray:
    """Per-pixel ``log(f + k)``."""
    if not k > 0:
        raise InputError(f"k must be > 0, got {k!r}")
    px = frame.pixels if isinstance(frame, Frame) else np.asarray(frame, dtype=np.float64)
    if not np.all(np.isfinite(px)):
        raise InputError("frame contains non-finite pixels")
    return np.log(px + k)


@dataclass(frozen=True, eq=False)
class SimulatorState:
    """Reference levels after the last processed frame.

    ``start_log`` is the log image of the first frame, ``n_pos``/``n_neg`` the
    cumulative per-pixel event counts (flattened, row-major).
    """

    start_log: np.ndarray
    n_pos: np.ndarray
    n_neg: np.ndarray
    params: CameraParams

    @property
    def ref_log(self) -> np.ndarray:
        p = self.params
        return self.start_log + (
            self.n_pos.astype(np.float64) * p.theta_pos - self.n_neg.astype(np.float64) * p.theta_neg
        )


class EventSimulator:
    """Incremental simulator; feed frames in time order.

    >>> sim = EventSimulator(CameraParams(0.2, 0.2, 0.1))
    >>> sim.feed(Frame(np.zeros((2, 2)), t=0)).__len__()
    0
    """

    def __init__(self, params: CameraParams, *, backend=None, threads=1):
        self.params = params
        self._kernels = _backend.kernels if backend is None else _backend.load(backend)
        self.threads = max(1, int(threads))
        self._shape = None
        self._last_t = None
        self._last_log = None
        self._start = None
        self._cpos = None
        self._cneg = None

    @property
    def state(self) -> SimulatorState:
        if self._start is None:
            raise InputError("simulator has not seen a frame yet")
        return SimulatorState(self._start.copy(), self._cpos.copy(), self._cneg.copy(), self.params)

    def feed(self, frame: Frame) -> EventStream:
        """Process the next frame and return the events since the previous one."""
        h, w = frame.shape
        logs = log_intensity(frame, self.params.k).ravel()
        if self._shape is None:
            self._shape = (h, w)
            self._start = logs.copy()
            self._cpos = np.zeros(h * w, dtype=np.int64)
            self._cneg = np.zeros(h * w, dtype=np.int64)
            self._last_t, self._last_log = frame.t, logs
            return EventStream.empty(w, h)
        if (h, w) != self._shape:
            raise InputError(f"frame size {w}x{h} differs from sequence size {self._shape[1]}x{self._shape[0]}")
        if frame.t <= self._last_t:
            raise InputError(f"frame timestamps must increase strictly ({frame.t} after {self._last_t})")

        t, pix, p = self._run(self._last_log, logs, self._last_t, frame.t - self._last_t)
        self._last_t, self._last_log = frame.t, logs
        return _canonical(w, h, t, pix, p)

    def _run(self, a, b, t_start, dt):
        tp, tn = self.params.theta_pos, self.params.theta_neg
        k = self._kernels
        n = a.shape[0]
        if self.threads == 1 or n < 4096:
            return k.simulate_interval(self._start, a, b, self._cpos, self._cneg, t_start, dt, tp, tn, 0)
        # contiguous pixel bands are row bands; each thread owns its slice of the counters
        edges = np.linspace(0, n, self.threads + 1).astype(int)

        def band(lo, hi):
            cpos, cneg = self._cpos[lo:hi], self._cneg[lo:hi]
            return k.simulate_interval(
                self._start[lo:hi], a[lo:hi], b[lo:hi], cpos, cneg, t_start, dt, tp, tn, lo
            )

        with ThreadPoolExecutor(self.threads) as pool:
            parts = list(pool.map(lambda e: band(*e), zip(edges[:-1], edges[1:])))
        return tuple(np.concatenate(c) for c in zip(*parts))


def _canonical(width, height, t, pix, p) -> EventStream:
    npix = width * height
    # one int64 key orders by (t, y, x, p): pixel index is y * width + x
    key = (t * npix + pix) * 2 + (p > 0)
    key.sort()
    pol = (key & 1).astype(np.int8) * 2 - 1
    rest = key >> 1
    pix_s = rest % npix
    return EventStream(
        width, height, rest // npix, pix_s % width, pix_s // width, pol, validate=False
    )


def simulate_events(frames: Sequence[Frame], params: CameraParams, *, backend=None, threads=1) -> EventStream:
    """Simulate the event stream produced while ``frames`` play back."""
    if len(frames) < 2:
        raise InputError("need at least two frames to simulate events")
    sim = EventSimulator(params, backend=backend, threads=threads)
    parts = [sim.feed(f) for f in frames]
    h, w = frames[0].shape
    return EventStream(
        w, h,
        np.concatenate([s.t for s in parts]),
        np.concatenate([s.x for s in parts]),
        np.concatenate([s.y for s in parts]),
        np.concatenate([s.p for s in parts]),
        validate=False,
    )


def sample_thresholds(seed: int, mean_pos: float, mean_neg: float, sigma: float, k: float = 0.1) -> CameraParams:
    """Draw per-sequence thresholds from N(mean, sigma), resampling values <= 0.01."""
    if not (mean_pos > 0 and mean_neg > 0):
        raise InputError("threshold means must be > 0")
    if sigma < 0:
        raise InputError("sigma must be >= 0")
    rng = np.random.default_rng(seed)

    def draw(mean):
        while True:
            v = float(rng.normal(mean, sigma)) if sigma > 0 else float(mean)
            if v > MIN_SAMPLED_THRESHOLD:
                return v
            if sigma == 0:
                raise InputError(f"threshold mean {mean} is not above {MIN_SAMPLED_THRESHOLD}")

    theta_pos = draw(mean_pos)
    theta_neg = draw(mean_neg)
    return CameraParams(theta_pos, theta_neg, k)
