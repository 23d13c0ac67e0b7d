"""Recursive frame reconstruction from event counts.

Each interval advances a per-pixel log state by ``theta_pos * E+ -
theta_neg * E-``; the emitted frame is ``exp(L) - k`` clamped to [0, 1].
The state itself is never clamped.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterator, Mapping, Sequence

import numpy as np

from . import _backend
from .errors import ConfigurationError, InputError
from .types import CameraParams, CountPair, EventStream, Frame


def count_events(stream: EventStream, t0: int, t1: int, *, backend=None) -> CountPair:
    """Per-pixel positive/negative counts of events with ``t0 <= t < t1``."""
    if not t0 < t1:
        raise InputError(f"count interval requires t0 < t1, got [{t0}, {t1})")
    kernels = _backend.kernels if backend is None else _backend.load(backend)
    w, h = stream.width, stream.height
    if len(stream.t) and np.all(stream.t[1:] >= stream.t[:-1]):
        lo, hi = np.searchsorted(stream.t, [t0, t1], side="left")
        sel = slice(lo, hi)
    else:
        sel = (stream.t >= t0) & (stream.t < t1)
    pix = stream.y[sel].astype(np.int64) * w + stream.x[sel]
    pos, neg = kernels.count_events(np.ascontiguousarray(pix), np.ascontiguousarray(stream.p[sel]), w * h)
    return CountPair(pos.reshape(h, w), neg.reshape(h, w), t0, t1)


@dataclass(frozen=True, eq=False)
class ReconstructionState:
    """Recursion state since the last reset.

    The log state ``L = log(f + k)`` is stored as the keyframe it was reset
    to (``anchor``) plus the accumulated log change ``delta``. Emitting
    ``anchor + expm1(delta) * (anchor + k)`` is the same closed form as
    ``exp(L) - k`` but returns the keyframe bit-exactly when no events
    arrived. ``overflow`` is the fraction of pixels clamped at the last
    emission (diagnostic only).
    """

    anchor: np.ndarray
    delta: np.ndarray
    params: CameraParams
    frames_since_reset: int = 0
    reset_interval: int = 0
    t: int = 0
    overflow: float = 0.0

    def __post_init__(self):
        anchor = np.array(self.anchor, dtype=np.float64, copy=True)
        delta = np.array(self.delta, dtype=np.float64, copy=True)
        if anchor.shape != delta.shape or anchor.ndim != 2:
            raise InputError("anchor and delta must be 2-D arrays of equal shape")
        if not (np.all(np.isfinite(anchor)) and np.all(np.isfinite(delta))):
            raise InputError("reconstruction state must be finite")
        if self.reset_interval < 0 or self.frames_since_reset < 0:
            raise InputError("reset interval and frame counter must be non-negative")
        anchor.setflags(write=False)
        delta.setflags(write=False)
        object.__setattr__(self, "anchor", anchor)
        object.__setattr__(self, "delta", delta)

    @classmethod
    def from_keyframe(cls, keyframe: Frame, params: CameraParams, reset_interval: int = 0):
        return cls(keyframe.pixels, np.zeros(keyframe.shape), params, 0, reset_interval, keyframe.t)

    @property
    def log_state(self) -> np.ndarray:
        return np.log(self.anchor + self.params.k) + self.delta

    @property
    def shape(self):
        return self.anchor.shape

    def emit(self) -> Frame:
        return _emit(self.anchor, self.delta, self.params.k, self.t)[0]


def _emit(anchor, delta, k, t):
    raw = anchor + np.expm1(delta) * (anchor + k)
    clipped = np.clip(raw, 0.0, 1.0)
    overflow = float(np.count_nonzero(raw != clipped)) / raw.size
    return Frame(clipped, t), overflow


def reset(state: ReconstructionState, keyframe: Frame) -> ReconstructionState:
    if keyframe.shape != state.shape:
        raise InputError("keyframe size does not match reconstruction state")
    return replace(
        state,
        anchor=keyframe.pixels,
        delta=np.zeros(keyframe.shape),
        frames_since_reset=0,
        t=keyframe.t,
        overflow=0.0,
    )


def step(state: ReconstructionState, counts: CountPair) -> tuple[ReconstructionState, Frame]:
    """Advance one interval and emit the frame at ``counts.t1``."""
    if counts.pos.shape != state.shape:
        raise InputError("count images do not match reconstruction state")
    p = state.params
    delta = state.delta + (counts.pos * p.theta_pos - counts.neg * p.theta_neg)
    frame, overflow = _emit(state.anchor, delta, p.k, counts.t1)
    nxt = replace(
        state,
        delta=delta,
        frames_since_reset=state.frames_since_reset + 1,
        t=counts.t1,
        overflow=overflow,
    )
    return nxt, frame


def _keyframe_index(keyframes) -> dict[int, Frame]:
    if isinstance(keyframes, Mapping):
        return {int(t): f.with_time(int(t)) for t, f in keyframes.items()}
    return {f.t: f for f in keyframes}


def iter_reconstruction(
    stream: EventStream,
    keyframes: Sequence[Frame] | Mapping[int, Frame],
    boundaries: Sequence[int],
    params: CameraParams,
    reset_interval: int = 0,
    *,
    backend=None,
) -> Iterator[tuple[ReconstructionState, Frame]]:
    """Yield ``(state, frame)`` for each interval ``[t_i, t_i+1)``."""
    bounds = [int(b) for b in boundaries]
    if len(bounds) < 2:
        raise InputError("need at least two boundaries")
    if any(b1 <= b0 for b0, b1 in zip(bounds, bounds[1:])):
        raise InputError("boundaries must be strictly increasing")
    if reset_interval < 0:
        raise InputError("reset interval must be >= 0")
    keys = _keyframe_index(keyframes)
    if bounds[0] not in keys:
        raise ConfigurationError(f"no keyframe at the first boundary t={bounds[0]}")
    if reset_interval > 0:
        missing = [bounds[i] for i in range(reset_interval, len(bounds) - 1, reset_interval) if bounds[i] not in keys]
        if missing:
            raise ConfigurationError(f"resets due at t={missing[:5]} but no keyframes are available there")
    first = keys[bounds[0]]
    if first.shape != (stream.height, stream.width):
        raise InputError("keyframe size does not match event sensor size")
    state = ReconstructionState.from_keyframe(first, params, reset_interval)
    for t0, t1 in zip(bounds, bounds[1:]):
        if reset_interval > 0 and state.frames_since_reset >= reset_interval:
            state = reset(state, keys[t0])
        state, frame = step(state, count_events(stream, t0, t1, backend=backend))
        yield state, frame


def reconstruct_sequence(stream, keyframes, boundaries, params, reset_interval=0, *, backend=None) -> list[Frame]:
    """Reconstruct one frame per boundary interval; see :func:`iter_reconstruction`."""
    return [f for _, f in iter_reconstruction(stream, keyframes, boundaries, params, reset_interval, backend=backend)]
