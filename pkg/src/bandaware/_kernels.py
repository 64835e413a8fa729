"""Compiled pixel kernels for the banding detector.

All kernels release the GIL so frames can be scored from worker threads.
"""
import numba
import numpy as np

# room for value +/- step lookups without bounds checks; steps are <= this
HIST_PAD = 64


@numba.njit(cache=True, nogil=True)
def flat_mask(img, half, diff_threshold, min_similar, lo, hi):
    H, W = img.shape
    out = np.zeros((H, W), np.bool_)
    for y in range(H):
        y0 = max(0, y - half)
        y1 = min(H, y + half + 1)
        for x in range(W):
            v = np.int64(img[y, x])
            if v < lo or v > hi:
                continue
            x0 = max(0, x - half)
            x1 = min(W, x + half + 1)
            similar = -1  # the centre pixel matches itself
            for yy in range(y0, y1):
                for xx in range(x0, x1):
                    if abs(np.int64(img[yy, xx]) - v) <= diff_threshold:
                        similar += 1
            out[y, x] = similar >= min_similar
    return out


@numba.njit(cache=True, nogil=True)
def step_evidence(img, mask, half, steps, weights):
    """Per-pixel step evidence using a running histogram per row.

    The window histogram holds masked-in values only; it slides one column
    at a time (add the entering column, drop the leaving one).
    """
    H, W = img.shape
    pad = HIST_PAD
    hist = np.zeros(1024 + 2 * pad, np.int64)
    evidence = np.zeros((H, W), np.float64)
    nsteps = steps.shape[0]
    for y in range(H):
        y0 = max(0, y - half)
        y1 = min(H, y + half + 1)
        hist[:] = 0
        for xx in range(0, min(W, half + 1)):
            for yy in range(y0, y1):
                if mask[yy, xx]:
                    hist[img[yy, xx] + pad] += 1
        for x in range(W):
            if x > 0:
                xa = x + half
                if xa < W:
                    for yy in range(y0, y1):
                        if mask[yy, xa]:
                            hist[img[yy, xa] + pad] += 1
                xr = x - half - 1
                if xr >= 0:
                    for yy in range(y0, y1):
                        if mask[yy, xr]:
                            hist[img[yy, xr] + pad] -= 1
            if not mask[y, x]:
                continue
            v = np.int64(img[y, x]) + pad
            area = (y1 - y0) * (min(W, x + half + 1) - max(0, x - half))
            half_area = area / 2.0
            n0 = hist[v]
            best = 0.0
            for i in range(nsteps):
                s = steps[i]
                e = weights[i] * min(n0, hist[v + s]) / half_area
                if e > best:
                    best = e
                e = weights[i] * min(n0, hist[v - s]) / half_area
                if e > best:
                    best = e
            evidence[y, x] = min(best, 1.0)
    return evidence
