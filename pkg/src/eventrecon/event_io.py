"""Event text files ("t x y p"), binary PGM frames and boundary lists."""

from __future__ import annotations

import logging
import re
from decimal import ROUND_HALF_EVEN, Decimal, InvalidOperation
from pathlib import Path

import numpy as np

from .errors import FormatError, InputError, ParseError
from .types import EventStream, Frame

log = logging.getLogger(__name__)

_PLAIN_SECONDS = re.compile(r"^(\d+)(?:\.(\d{0,6}))?$")
_MICRO = Decimal(1_000_000)


def seconds_to_us(text: str) -> int:
    """Decimal seconds to integer microseconds, rounding half to even."""
    m = _PLAIN_SECONDS.match(text)
    if m:
        # exact for up to 6 decimals without going through Decimal
        return int(m.group(1)) * 1_000_000 + int((m.group(2) or "").ljust(6, "0"))
    try:
        value = Decimal(text) * _MICRO
    except InvalidOperation:
        raise ValueError(f"bad timestamp {text!r}") from None
    if not value.is_finite():
        raise ValueError(f"bad timestamp {text!r}")
    return int(value.quantize(Decimal(1), rounding=ROUND_HALF_EVEN))


def us_to_seconds(t: int) -> str:
    return f"{t // 1_000_000}.{t % 1_000_000:06d}"


def read_events_text(path, width, height) -> EventStream:
    """Parse a whitespace-separated ``t x y p`` file.

    Polarity 1 maps to +1 and 0 to -1. Out-of-order input is re-sorted into
    canonical order and the number of displaced events is logged.
    """
    ts, xs, ys, ps = [], [], [], []
    with open(path, "r", encoding="ascii", errors="strict") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 4:
                raise ParseError(f"expected 4 fields 't x y p', got {len(parts)}", lineno)
            try:
                t = seconds_to_us(parts[0])
                x, y, p = int(parts[1]), int(parts[2]), int(parts[3])
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
            if t < 0:
                raise ParseError(f"negative timestamp {parts[0]}", lineno)
            if p not in (0, 1):
                raise ParseError(f"polarity must be 0 or 1, got {p}", lineno)
            if not (0 <= x < width and 0 <= y < height):
                raise ParseError(f"coordinates ({x}, {y}) outside {width}x{height} sensor", lineno)
            ts.append(t)
            xs.append(x)
            ys.append(y)
            ps.append(1 if p == 1 else -1)
    raw = EventStream(width, height, ts, xs, ys, ps, validate=False)
    order = np.lexsort(raw.sort_keys())
    displaced = int(np.count_nonzero(order != np.arange(len(order))))
    if displaced:
        log.warning("%s: %d events out of canonical order, re-sorted", path, displaced)
        return raw.sorted()
    return EventStream(width, height, raw.t, raw.x, raw.y, raw.p)


def write_events_text(stream: EventStream, path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        for t, x, y, p in zip(stream.t.tolist(), stream.x.tolist(), stream.y.tolist(), stream.p.tolist()):
            fh.write(f"{us_to_seconds(t)} {x} {y} {1 if p > 0 else 0}\n")


def _pgm_tokens(data: bytes, count: int):
    """Read ``count`` header tokens, skipping comments; return tokens and payload offset."""
    tokens, i, n = [], 0, len(data)
    while len(tokens) < count:
        while i < n and data[i:i + 1].isspace():
            i += 1
        if i < n and data[i:i + 1] == b"#":
            while i < n and data[i:i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        start = i
        while i < n and not data[i:i + 1].isspace() and data[i:i + 1] != b"#":
            i += 1
        if start == i:
            raise FormatError("truncated PGM header")
        tokens.append(data[start:i])
    # exactly one whitespace byte separates the header from the raster
    return tokens, i + 1


def read_frame_pgm(path, t=0) -> Frame:
    data = Path(path).read_bytes()
    tokens, offset = _pgm_tokens(data, 4)
    if tokens[0] != b"P5":
        raise FormatError(f"{path}: expected P5 magic, got {tokens[0]!r}")
    try:
        width, height, maxval = (int(tok) for tok in tokens[1:])
    except ValueError:
        raise FormatError(f"{path}: malformed PGM header") from None
    if maxval != 255:
        raise FormatError(f"{path}: only maxval 255 is supported, got {maxval}")
    if len(data) < offset + width * height:
        raise FormatError(f"{path}: raster shorter than {width}x{height}")
    raster = np.frombuffer(data, dtype=np.uint8, count=width * height, offset=offset)
    return Frame(raster.reshape(height, width) / 255.0, t)


def write_frame_pgm(frame: Frame, path) -> None:
    # np.rint rounds half to even
    raster = np.rint(frame.pixels * 255.0).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (frame.width, frame.height))
        fh.write(raster.tobytes())


def read_boundaries(path) -> list[int]:
    out = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            try:
                out.append(int(s))
            except ValueError:
                raise ParseError(f"expected integer microseconds, got {s!r}", lineno) from None
    return out


def write_boundaries(boundaries, path) -> None:
    Path(path).write_text("".join(f"{int(b)}\n" for b in boundaries))


TIMESTAMPS_FILE = "timestamps.txt"


def read_frame_dir(path, timestamps=None, dt=None) -> list[Frame]:
    """Load ``*.pgm`` files in name order.

    Timestamps come from ``timestamps`` (a list), else ``timestamps.txt`` in
    the directory, else ``i * dt``.
    """
    path = Path(path)
    if not path.is_dir():
        raise InputError(f"{path} is not a directory")
    files = sorted(path.glob("*.pgm"))
    if not files:
        raise InputError(f"{path} contains no .pgm frames")
    if timestamps is None and (path / TIMESTAMPS_FILE).exists():
        timestamps = read_boundaries(path / TIMESTAMPS_FILE)
    if timestamps is None:
        if dt is None:
            raise InputError(f"{path}: no {TIMESTAMPS_FILE} and no frame interval given")
        timestamps = [i * int(dt) for i in range(len(files))]
    if len(timestamps) != len(files):
        raise InputError(f"{path}: {len(files)} frames but {len(timestamps)} timestamps")
    return [read_frame_pgm(f, t) for f, t in zip(files, timestamps)]


def write_frame_dir(frames, path) -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    for i, f in enumerate(frames):
        write_frame_pgm(f, path / f"frame_{i:06d}.pgm")
    write_boundaries([f.t for f in frames], path / TIMESTAMPS_FILE)
