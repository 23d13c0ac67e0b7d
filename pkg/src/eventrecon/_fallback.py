"""Pure numpy implementations of the hot kernels.

These mirror ``_kernels.pyx`` operation for operation so both backends
produce bit-identical events. Every floating-point expression here has a
twin in the Cython source; change them together.
"""

import numpy as np


def _ref(l0, cpos, cneg, tp, tn):
    return l0 + (cpos.astype(np.float64) * tp - cneg.astype(np.float64) * tn)


def _crossings(l0, a, b, cpos, cneg, tp, tn):
    """Number of up and down crossings per pixel for one interval."""
    # candidate from the closed form, then walk to the exact stopping index
    # of the sequential rule `while b - ref >= theta: advance`
    n_up = np.floor((b - _ref(l0, cpos, cneg, tp, tn)) / tp)
    n_up = np.clip(np.nan_to_num(n_up), 0, None).astype(np.int64)
    while True:
        more = b - _ref(l0, cpos + n_up, cneg, tp, tn) >= tp
        if not more.any():
            break
        n_up += more
    while True:
        fewer = (n_up > 0) & ~(b - _ref(l0, cpos + n_up - 1, cneg, tp, tn) >= tp)
        if not fewer.any():
            break
        n_up -= fewer
    cpos_after = cpos + n_up

    n_dn = np.floor((_ref(l0, cpos_after, cneg, tp, tn) - b) / tn)
    n_dn = np.clip(np.nan_to_num(n_dn), 0, None).astype(np.int64)
    while True:
        more = _ref(l0, cpos_after, cneg + n_dn, tp, tn) - b >= tn
        if not more.any():
            break
        n_dn += more
    while True:
        fewer = (n_dn > 0) & ~(_ref(l0, cpos_after, cneg + n_dn - 1, tp, tn) - b >= tn)
        if not fewer.any():
            break
        n_dn -= fewer
    return n_up, n_dn


def _emit(l0, a, b, base_pos, base_neg, n, step_pos, t_start, dt, tp, tn, pix_offset):
    idx = np.nonzero(n)[0]
    if idx.size == 0:
        return (np.empty(0, np.int64),) * 2
    reps = n[idx]
    pix = np.repeat(idx, reps)
    # 1-based index of each event within its pixel's run
    starts = np.cumsum(reps) - reps
    j = np.arange(reps.sum(), dtype=np.int64) - np.repeat(starts, reps) + 1
    if step_pos:
        level = _ref(l0[pix], base_pos[pix] + j, base_neg[pix], tp, tn)
    else:
        level = _ref(l0[pix], base_pos[pix], base_neg[pix] + j, tp, tn)
    frac = (level - a[pix]) / (b[pix] - a[pix])
    off = np.floor(frac * dt)
    off = np.clip(off, 0, dt - 1).astype(np.int64)
    return t_start + off, pix + pix_offset


def simulate_interval(l0, a, b, cpos, cneg, t_start, dt, theta_pos, theta_neg, pix_offset=0):
    """Emit the threshold crossings of one linear log-intensity ramp.

    ``l0`` is the per-pixel starting log intensity, ``a``/``b`` the log
    intensity at the interval ends, ``cpos``/``cneg`` the cumulative counts
    so far (updated in place). Returns unsorted ``(t, pix, p)`` arrays.
    """
    n_up, n_dn = _crossings(l0, a, b, cpos, cneg, theta_pos, theta_neg)
    cpos_after = cpos + n_up
    t_up, pix_up = _emit(l0, a, b, cpos, cneg, n_up, True, t_start, dt, theta_pos, theta_neg, pix_offset)
    t_dn, pix_dn = _emit(l0, a, b, cpos_after, cneg, n_dn, False, t_start, dt, theta_pos, theta_neg, pix_offset)
    cpos += n_up
    cneg += n_dn
    t = np.concatenate([t_up, t_dn])
    pix = np.concatenate([pix_up, pix_dn])
    p = np.concatenate([np.ones(len(t_up), np.int8), -np.ones(len(t_dn), np.int8)])
    return t, pix, p


def count_events(pix, p, npix):
    pos = np.bincount(pix[p > 0], minlength=npix).astype(np.int64)
    neg = np.bincount(pix[p < 0], minlength=npix).astype(np.int64)
    return pos, neg


def voxel_accumulate(tstar, pix, p, bins, npix):
    out = np.zeros(bins * npix, dtype=np.float64)
    if len(tstar) == 0:
        return out
    pol = p.astype(np.float64)
    lower = np.floor(tstar).astype(np.int64)
    w_upper = tstar - lower
    w_lower = 1.0 - w_upper
    keep = (lower >= 0) & (lower < bins)
    np.add.at(out, lower[keep] * npix + pix[keep], pol[keep] * w_lower[keep])
    upper = lower + 1
    keep = (upper >= 0) & (upper < bins) & (w_upper > 0)
    np.add.at(out, upper[keep] * npix + pix[keep], pol[keep] * w_upper[keep])
    return out
