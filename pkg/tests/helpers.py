"""Shared test helpers and independent oracles."""

import numpy as np

from eventrecon.types import Frame


def frames_from(values, dt=1000, shape=(1, 1)):
    """Frames holding a scalar (broadcast) or array per step, spaced ``dt`` apart."""
    return [Frame(np.broadcast_to(np.asarray(v, dtype=float), shape), i * dt) for i, v in enumerate(values)]


def brute_force_counts(logs, theta_pos, theta_neg):
    """Scalar per-pixel event counts per interval by stepping a running reference.

    Independent of the vectorised path: the reference is accumulated
    (``ref += theta``) rather than recomputed from counts, and crossings are
    found one at a time.
    """
    logs = np.asarray(logs, dtype=float)
    n_frames, n_pix = logs.shape
    pos = np.zeros((n_frames - 1, n_pix), dtype=int)
    neg = np.zeros((n_frames - 1, n_pix), dtype=int)
    ref = logs[0].copy()
    for i in range(1, n_frames):
        for j in range(n_pix):
            b = logs[i, j]
            while b - ref[j] >= theta_pos:
                ref[j] += theta_pos
                pos[i - 1, j] += 1
            while ref[j] - b >= theta_neg:
                ref[j] -= theta_neg
                neg[i - 1, j] += 1
    return pos, neg, ref
