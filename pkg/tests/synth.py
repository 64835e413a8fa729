"""Synthetic frames, panels and manifests shared by the tests."""
import numpy as np


def gradient(q, size=256, lo=64, hi=940):
    """Horizontal lo->hi ramp quantized to multiples of q."""
    x = np.arange(size)
    ramp = lo + (hi - lo) * x / (size - 1)
    row = q * np.round(ramp / q)
    return np.tile(row, (size, 1)).astype(np.uint16)


def dithered(img, amplitude, rng):
    noisy = img.astype(np.int64) + rng.integers(-amplitude, amplitude + 1, img.shape)
    return np.clip(noisy, 0, 1023).astype(np.uint16)


def two_band(low, high, size=128):
    img = np.full((size, size), low, dtype=np.uint16)
    img[:, size // 2:] = high
    return img


def staircase(width=256, height=256, band=16, levels=8, step=4, base=400):
    """Periodic up/down staircase whose period equals the frame width."""
    x = np.arange(width)
    idx = (x // band) % (2 * levels)
    tri = np.where(idx < levels, idx, 2 * levels - idx)
    return np.tile(base + step * tri, (height, 1)).astype(np.uint16)


def random_banded_frame(rng, size=128):
    """Quantized smooth field with occasional texture and out-of-range patches."""
    yy, xx = np.mgrid[0:size, 0:size] / size
    centre = rng.uniform(40, 980)
    span = rng.uniform(4, 120)
    field = centre + span * (
        rng.uniform(-1, 1) * xx + rng.uniform(-1, 1) * yy
        + 0.5 * np.sin(2 * np.pi * (rng.uniform(0.2, 2) * xx + rng.uniform(0, 1)))
    )
    q = int(rng.integers(1, 9))
    img = q * np.round(field / q)
    if rng.random() < 0.5:
        y0, x0 = rng.integers(0, size - 32, 2)
        h, w = rng.integers(8, 32, 2)
        img[y0:y0 + h, x0:x0 + w] += rng.integers(-6, 7, (h, w))
    if rng.random() < 0.3:
        y0, x0 = rng.integers(0, size - 16, 2)
        img[y0:y0 + 16, x0:x0 + 16] = rng.choice([10, 1000])
    return np.clip(img, 0, 1023).astype(np.uint16)


def simulate_panel(rng, n_items=84, n_subjects=42, psi_range=(0, 100), bias_range=(-10, 10),
                   v_range=(5, 15)):
    """Scores from the bias + inconsistency opinion model.

    The true biases are centred to sum to zero, the same convention the
    estimator uses. Scores are clipped to the 0-100 slider range.
    """
    psi = rng.uniform(*psi_range, n_items)
    delta = rng.uniform(*bias_range, n_subjects)
    delta -= delta.mean()
    v = rng.uniform(*v_range, n_subjects)
    scores = psi[:, None] + delta[None, :] + v[None, :] * rng.standard_normal((n_items, n_subjects))
    return psi, delta, v, np.clip(scores, 0, 100)


def manifest(mos, ci95=None, name="synthetic", sources=None, **metrics):
    """DatasetManifest from parallel lists; None marks a null cell."""
    from bandaware.harness import DatasetManifest, ManifestItem

    n = len(mos)
    items = tuple(
        ManifestItem(
            item_id=f"item{i:03d}",
            source_id=sources[i] if sources else f"src{i % 4}",
            mos=float(mos[i]),
            ci95=None if ci95 is None else float(ci95[i]),
            metrics={k: None if v[i] is None else float(v[i]) for k, v in metrics.items()},
        )
        for i in range(n)
    )
    return DatasetManifest(items, tuple(metrics), name, ci95 is not None)


def calibration_fixture(alpha_star=0.85, half_width=0.005):
    """Manifest whose SROCC reaches 1 only for alpha in (a* - hw, a* + hw).

    Each pair is a clean item and a banded item whose fused scores cross at
    a* - hw (first pair) or a* + hw (second pair), with MOS ordered as at a*.
    Extra pairs repeat the pattern at other VMAF levels.
    """
    vmaf, band = [], []
    for level in (20.0, 45.0, 70.0):
        for cross in (alpha_star - half_width, alpha_star + half_width):
            vmaf += [level, level + 10 * cross]
            band += [0.0, 10.0]
            level += 5.0
    fused = [v - alpha_star * b for v, b in zip(vmaf, band)]
    return manifest(fused, vmaf=vmaf, cambi=band)


def banded_clip(n_frames=16, size=256, q8=2, seed=0):
    """8-bit frames: a slowly drifting dark ramp quantized to q8 codes."""
    rng = np.random.default_rng(seed)
    x = np.arange(size) / (size - 1)
    frames = []
    for t in range(n_frames):
        lo = 40 + 2 * t + rng.integers(0, 3)
        ramp = lo + 60 * x
        row = q8 * np.round(ramp / q8)
        frames.append(np.tile(row, (size, 1)).astype(np.uint8))
    return frames


def write_clip(path, frames8):
    from bandaware import media
    from bandaware.media import LumaPlane

    with open(path, "wb") as fh:
        media.write_y4m([LumaPlane.from_8bit(f) for f in frames8], fh)
