"""Domain types: events, frames, camera parameters, counts and voxel grids.

All containers are frozen; array fields are copied on construction and
marked read-only so instances can be shared between workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Optional, Sequence

import numpy as np

from .errors import InputError


def _frozen(arr, dtype):
    out = np.array(arr, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Event:
    """A single polarity spike at integer-microsecond time ``t``."""

    t: int
    x: int
    y: int
    polarity: int

    def __post_init__(self):
        if int(self.t) != self.t or self.t < 0:
            raise InputError(f"event timestamp must be a non-negative integer, got {self.t!r}")
        if self.x < 0 or self.y < 0:
            raise InputError(f"event coordinates must be non-negative, got ({self.x}, {self.y})")
        if self.polarity not in (1, -1):
            raise InputError(f"polarity must be +1 or -1, got {self.polarity!r}")


class Violation(NamedTuple):
    index: int
    rule: str
    message: str


class EventStream:
    """Events from a ``width`` x ``height`` sensor stored as parallel arrays.

    ``t`` is int64 microseconds, ``x``/``y`` are int32 pixel indices and
    ``p`` is int8 polarity in {-1, +1}. Canonical order is ascending
    ``(t, y, x, p)``.

    By default the constructor rejects streams that break the ordering or
    bounds rules. Pass ``validate=False`` to hold raw data, e.g. before
    :meth:`sorted` or :func:`validate_stream`.
    """

    __slots__ = ("width", "height", "t", "x", "y", "p")

    def __init__(self, width, height, t=(), x=(), y=(), p=(), *, validate=True):
        width, height = int(width), int(height)
        if width <= 0 or height <= 0:
            raise InputError(f"sensor dimensions must be positive, got {width}x{height}")
        t = _frozen(t, np.int64)
        x = _frozen(x, np.int32)
        y = _frozen(y, np.int32)
        p = _frozen(p, np.int8)
        if not (t.ndim == x.ndim == y.ndim == p.ndim == 1):
            raise InputError("event fields must be one-dimensional")
        if not (len(t) == len(x) == len(y) == len(p)):
            raise InputError("event field arrays differ in length")
        if len(p) and not np.all((p == 1) | (p == -1)):
            raise InputError("polarity must be +1 or -1")
        if len(t) and t.min() < 0:
            raise InputError("timestamps must be non-negative")
        for name, value in (("width", width), ("height", height), ("t", t), ("x", x), ("y", y), ("p", p)):
            object.__setattr__(self, name, value)
        if validate:
            bad = validate_stream(self)
            if bad is not None:
                raise InputError(f"invalid event stream: {bad.message}")

    def __setattr__(self, name, value):
        raise AttributeError("EventStream is immutable")

    @classmethod
    def empty(cls, width, height):
        return cls(width, height)

    @classmethod
    def from_events(cls, width, height, events: Sequence[Event], *, validate=True):
        return cls(
            width,
            height,
            [e.t for e in events],
            [e.x for e in events],
            [e.y for e in events],
            [e.polarity for e in events],
            validate=validate,
        )

    def __len__(self):
        return len(self.t)

    def __getitem__(self, i) -> Event:
        return Event(int(self.t[i]), int(self.x[i]), int(self.y[i]), int(self.p[i]))

    def __iter__(self) -> Iterator[Event]:
        for i in range(len(self)):
            yield self[i]

    def __eq__(self, other):
        if not isinstance(other, EventStream):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and np.array_equal(self.t, other.t)
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.p, other.p)
        )

    def __repr__(self):
        return f"EventStream({self.width}x{self.height}, {len(self)} events)"

    @property
    def events(self) -> list[Event]:
        return list(self)

    def sort_keys(self):
        """Canonical order as a lexsort key tuple (last key is primary)."""
        return (self.p, self.x, self.y, self.t)

    def sorted(self) -> "EventStream":
        order = np.lexsort(self.sort_keys())
        return EventStream(
            self.width, self.height,
            self.t[order], self.x[order], self.y[order], self.p[order],
        )

    def slice_time(self, t0, t1) -> "EventStream":
        """Events with ``t0 <= t < t1``; the stream must be canonical."""
        lo, hi = np.searchsorted(self.t, [t0, t1], side="left")
        return EventStream(
            self.width, self.height,
            self.t[lo:hi], self.x[lo:hi], self.y[lo:hi], self.p[lo:hi],
            validate=False,
        )

    def __add__(self, other: "EventStream") -> "EventStream":
        if (self.width, self.height) != (other.width, other.height):
            raise InputError("cannot merge streams from different sensor sizes")
        merged = EventStream(
            self.width, self.height,
            np.concatenate([self.t, other.t]),
            np.concatenate([self.x, other.x]),
            np.concatenate([self.y, other.y]),
            np.concatenate([self.p, other.p]),
            validate=False,
        )
        return merged.sorted()


def validate_stream(stream: EventStream) -> Optional[Violation]:
    """Return None when ``stream`` is valid, else the first violation.

    Rules are checked per event in index order: ``bounds`` (coordinates
    inside the sensor) then ``sorted`` (canonical order relative to the
    previous event).
    """
    n = len(stream.t)
    if n == 0:
        return None
    out_of_bounds = (
        (stream.x < 0) | (stream.x >= stream.width)
        | (stream.y < 0) | (stream.y >= stream.height)
    )
    t, y, x, p = stream.t, stream.y, stream.x, stream.p
    # an event is out of order when its key is strictly less than the previous key
    lt = np.zeros(n, dtype=bool)
    eq = np.ones(n - 1, dtype=bool)
    for a in (t, y, x, p):
        prev, cur = a[:-1], a[1:]
        lt[1:] |= eq & (cur < prev)
        eq &= cur == prev
    bad = out_of_bounds | lt
    if not bad.any():
        return None
    i = int(np.argmax(bad))
    if out_of_bounds[i]:
        return Violation(
            i, "bounds",
            f"event {i} at ({int(x[i])}, {int(y[i])}) outside {stream.width}x{stream.height}",
        )
    return Violation(i, "sorted", f"event {i} (t={int(t[i])}) precedes event {i - 1} in canonical order")


@dataclass(frozen=True, eq=False)
class Frame:
    """Normalized grayscale image, ``pixels[y, x]`` in [0, 1], at time ``t`` (us)."""

    pixels: np.ndarray
    t: int = 0

    def __post_init__(self):
        px = np.array(self.pixels, dtype=np.float64, copy=True)
        if px.ndim != 2 or px.size == 0:
            raise InputError(f"frame pixels must be a non-empty 2-D array, got shape {px.shape}")
        if not np.all(np.isfinite(px)):
            raise InputError("frame pixels must be finite")
        if px.min() < 0.0 or px.max() > 1.0:
            raise InputError("frame pixels must lie in [0, 1]")
        if int(self.t) != self.t or self.t < 0:
            raise InputError(f"frame timestamp must be a non-negative integer, got {self.t!r}")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)
        object.__setattr__(self, "t", int(self.t))

    @property
    def width(self):
        return self.pixels.shape[1]

    @property
    def height(self):
        return self.pixels.shape[0]

    @property
    def shape(self):
        return self.pixels.shape

    def __eq__(self, other):
        if not isinstance(other, Frame):
            return NotImplemented
        return self.t == other.t and np.array_equal(self.pixels, other.pixels)

    def with_time(self, t) -> "Frame":
        return Frame(self.pixels, t)


@dataclass(frozen=True)
class CameraParams:
    """Per-sequence contrast thresholds and the intensity offset ratio ``k``."""

    theta_pos: float
    theta_neg: float
    k: float

    def __post_init__(self):
        for name in ("theta_pos", "theta_neg", "k"):
            v = float(getattr(self, name))
            if not math.isfinite(v) or v <= 0.0:
                raise InputError(f"{name} must be finite and > 0, got {v!r}")
            object.__setattr__(self, name, v)

    @property
    def max_threshold(self):
        return max(self.theta_pos, self.theta_neg)


@dataclass(frozen=True, eq=False)
class CountPair:
    """Per-pixel positive and negative event counts over ``[t0, t1)``."""

    pos: np.ndarray
    neg: np.ndarray
    t0: int
    t1: int

    def __post_init__(self):
        pos = _frozen(self.pos, np.int64)
        neg = _frozen(self.neg, np.int64)
        if pos.ndim != 2 or pos.shape != neg.shape:
            raise InputError("count images must be 2-D with equal shapes")
        if (pos.size and pos.min() < 0) or (neg.size and neg.min() < 0):
            raise InputError("event counts must be non-negative")
        if not self.t0 < self.t1:
            raise InputError(f"count interval requires t0 < t1, got [{self.t0}, {self.t1})")
        object.__setattr__(self, "pos", pos)
        object.__setattr__(self, "neg", neg)

    @property
    def width(self):
        return self.pos.shape[1]

    @property
    def height(self):
        return self.pos.shape[0]

    @classmethod
    def zeros(cls, width, height, t0, t1):
        z = np.zeros((height, width), dtype=np.int64)
        return cls(z, z, t0, t1)


@dataclass(frozen=True, eq=False)
class VoxelGrid:
    """``bins`` x height x width tensor of bilinearly binned event polarity."""

    values: np.ndarray
    t0: int
    t1: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v = _frozen(self.values, np.float64)
        if v.ndim != 3 or v.shape[0] < 1:
            raise InputError(f"voxel values must be (bins, height, width), got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise InputError("voxel values must be finite")
        if not self.t0 < self.t1:
            raise InputError(f"voxel interval requires t0 < t1, got [{self.t0}, {self.t1})")
        object.__setattr__(self, "values", v)

    @property
    def bins(self):
        return self.values.shape[0]

    @property
    def height(self):
        return self.values.shape[1]

    @property
    def width(self):
        return self.values.shape[2]
