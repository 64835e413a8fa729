"""Contrast-aware multi-scale banding index.

The detector looks for small codeword steps between flat regions:

1. A flat-area mask keeps pixels whose 7x7 neighbourhood contains enough
   identical codewords and whose value lies inside video range.
2. For every kept pixel, a 31x31 window over kept pixels counts the pixel's
   own value and the values one step away; the weighted overlap of the two
   populations is the pixel's step evidence.
3. Evidence is averaged over the frame at each level of a 2x2 mean pyramid,
   averaged across levels and scaled by ``output_gain``.

A constant frame has no step anywhere and scores exactly 0.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _kernels
from .errors import InputError
from .media import FrameSequence, LumaPlane


def _default_weights():
    return {s: s / 8 for s in range(1, 9)}


@dataclass(frozen=True)
class BandingParams:
    num_scales: int = 4
    window: int = 31
    mask_neighborhood: int = 7
    mask_diff_threshold: int = 0
    # minimum number of neighbours within mask_diff_threshold for a pixel to count as flat
    mask_min_similar: int = 6
    steps: tuple[int, ...] = tuple(range(1, 9))
    step_weights: dict = field(default_factory=_default_weights)
    video_range: tuple[int, int] = (64, 940)
    output_gain: float = 24.0

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(int(s) for s in self.steps))
        object.__setattr__(self, "video_range", tuple(int(v) for v in self.video_range))
        object.__setattr__(self, "step_weights",
                           {int(k): float(v) for k, v in self.step_weights.items()})
        if self.num_scales < 1:
            raise InputError("num_scales must be >= 1")
        for name in ("window", "mask_neighborhood"):
            n = getattr(self, name)
            if n < 3 or n % 2 == 0:
                raise InputError(f"{name} must be odd and >= 3, got {n}")
        if self.mask_diff_threshold < 0 or self.mask_min_similar < 0:
            raise InputError("mask thresholds must be non-negative")
        if not self.steps:
            raise InputError("steps must not be empty")
        for s in self.steps:
            if not 1 <= s <= _kernels.HIST_PAD:
                raise InputError(f"step {s} outside [1, {_kernels.HIST_PAD}]")
            w = self.step_weights.get(s)
            if w is None or not 0.0 < w <= 1.0:
                raise InputError(f"step {s} needs a weight in (0, 1]")
        lo, hi = self.video_range
        if not lo < hi:
            raise InputError("video_range low must be below high")
        if self.output_gain <= 0:
            raise InputError("output_gain must be positive")

    @property
    def min_size(self) -> int:
        return 2 ** (self.num_scales - 1)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["steps"] = list(self.steps)
        d["video_range"] = list(self.video_range)
        d["step_weights"] = {str(k): v for k, v in sorted(self.step_weights.items())}
        return d


@dataclass(frozen=True)
class BandingReport:
    per_frame: tuple[float, ...]
    pooled: float
    params_used: BandingParams

    def to_dict(self) -> dict:
        return {
            "per_frame": list(self.per_frame),
            "pooled": self.pooled,
            "params": self.params_used.to_dict(),
        }


def _samples(plane) -> np.ndarray:
    if isinstance(plane, LumaPlane):
        return plane.samples
    return LumaPlane(plane).samples


def spatial_mask(plane, params: BandingParams = BandingParams()) -> np.ndarray:
    """Boolean flat-candidate mask, same shape as the plane."""
    lo, hi = params.video_range
    return _kernels.flat_mask(
        _samples(plane), params.mask_neighborhood // 2,
        params.mask_diff_threshold, params.mask_min_similar, lo, hi,
    )


def downscale(plane) -> LumaPlane:
    """Halve both dimensions with the round-half-up mean of each 2x2 block."""
    a = _samples(plane)
    h, w = a.shape
    if h < 2 or w < 2:
        raise InputError(f"cannot downscale a {w}x{h} plane")
    b = a[: h - h % 2, : w - w % 2].astype(np.uint32)
    s = b[0::2, 0::2] + b[1::2, 0::2] + b[0::2, 1::2] + b[1::2, 1::2]
    return LumaPlane(((s + 2) // 4).astype(np.uint16))


def _step_arrays(params):
    steps = np.array(params.steps, dtype=np.int64)
    weights = np.array([params.step_weights[s] for s in params.steps], dtype=np.float64)
    return steps, weights


def pixel_evidence(plane, mask, params: BandingParams = BandingParams()) -> np.ndarray:
    """Per-pixel step evidence in [0, 1]; zero wherever the mask is off."""
    a = _samples(plane)
    mask = np.ascontiguousarray(mask, dtype=np.bool_)
    if mask.shape != a.shape:
        raise InputError(f"mask shape {mask.shape} does not match plane shape {a.shape}")
    steps, weights = _step_arrays(params)
    return _kernels.step_evidence(a, mask, params.window // 2, steps, weights)


def scale_score(plane, mask=None, params: BandingParams = BandingParams()) -> float:
    """Mean step evidence over all pixels of one pyramid level."""
    if mask is None:
        mask = spatial_mask(plane, params)
    c = pixel_evidence(plane, mask, params)
    return float(np.sum(c)) / c.size


def frame_banding_index(plane, params: BandingParams = BandingParams()) -> float:
    a = _samples(plane)
    h, w = a.shape
    if min(h, w) < params.min_size:
        raise InputError(
            f"{w}x{h} frame is too small for {params.num_scales} scales "
            f"(needs at least {params.min_size} pixels per side)"
        )
    level = LumaPlane(a)
    scores = []
    for k in range(params.num_scales):
        if k:
            level = downscale(level)
        scores.append(scale_score(level, None, params))
    mean = math.fsum(scores) / len(scores)
    return params.output_gain * min(max(mean, 0.0), 1.0)


def sequence_banding_index(frames, params: BandingParams = BandingParams(),
                           workers: int = 1) -> BandingReport:
    """Score every frame and pool with the arithmetic mean.

    ``workers > 1`` scores frames on a thread pool; order is preserved.
    """
    planes = list(frames.frames if isinstance(frames, FrameSequence) else frames)
    if not planes:
        raise InputError("empty frame sequence")
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_frame = list(pool.map(lambda p: frame_banding_index(p, params), planes))
    else:
        per_frame = [frame_banding_index(p, params) for p in planes]
    return BandingReport(tuple(per_frame), math.fsum(per_frame) / len(per_frame), params)
