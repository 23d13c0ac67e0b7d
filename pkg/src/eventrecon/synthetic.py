"""Procedural test sequences: a sinusoidal texture drifting across the sensor."""

from __future__ import annotations

import numpy as np

from .types import Frame


def moving_texture(
    n_frames=20,
    width=240,
    height=180,
    *,
    dt=10_000,
    components=6,
    speed=1.0,
    contrast=0.9,
    seed=0,
) -> list[Frame]:
    """Frames of a random sum of plane waves translating ``speed`` px/frame.

    Intensities span ``0.5 +- contrast / 2``; timestamps are ``i * dt`` us.
    """
    rng = np.random.default_rng(seed)
    freq = rng.uniform(0.02, 0.12, size=components)
    angle = rng.uniform(0, 2 * np.pi, size=components)
    phase = rng.uniform(0, 2 * np.pi, size=components)
    amp = rng.uniform(0.5, 1.0, size=components)
    heading = rng.uniform(0, 2 * np.pi)
    vx, vy = speed * np.cos(heading), speed * np.sin(heading)
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    frames = []
    for i in range(n_frames):
        u = xx - vx * i
        v = yy - vy * i
        field = np.zeros((height, width))
        for f, a, ph, w in zip(freq, angle, phase, amp):
            field += w * np.sin(2 * np.pi * f * (u * np.cos(a) + v * np.sin(a)) + ph)
        field /= amp.sum()
        frames.append(Frame(np.clip(0.5 + 0.5 * contrast * field, 0.0, 1.0), i * dt))
    return frames
