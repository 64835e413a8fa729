"""Banding-aware VMAF: ``VMAF - alpha * banding``, clipped to the VMAF scale."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import stats
from .errors import ComputationError, InputError
from .harness import DatasetManifest

DEFAULT_ALPHA = 0.85


@dataclass(frozen=True)
class FusionParams:
    alpha: float = DEFAULT_ALPHA
    floor: float = 0.0
    ceiling: float = 100.0

    def __post_init__(self):
        if not self.alpha >= 0:
            raise InputError(f"alpha must be non-negative, got {self.alpha}")
        if not self.floor < self.ceiling:
            raise InputError("floor must be below ceiling")


@dataclass(frozen=True)
class CalibrationResult:
    best_alpha: float
    best_srocc: float
    curve: tuple  # (alpha, srocc) pairs

    def to_dict(self) -> dict:
        return {
            "best_alpha": round(self.best_alpha, 6),
            "best_srocc": round(self.best_srocc, 6),
            "curve": [[round(a, 6), None if math.isnan(s) else round(s, 6)] for a, s in self.curve],
        }


def fuse(vmaf: float, banding_index: float, params: FusionParams = FusionParams()) -> float:
    if banding_index < 0:
        raise InputError(f"banding index must be non-negative, got {banding_index}")
    return min(max(vmaf - params.alpha * banding_index, params.floor), params.ceiling)


def fuse_array(vmaf, banding, params: FusionParams = FusionParams()) -> np.ndarray:
    vmaf = np.asarray(vmaf, dtype=np.float64)
    banding = np.asarray(banding, dtype=np.float64)
    if np.any(banding < 0):
        raise InputError("banding index must be non-negative")
    return np.clip(vmaf - params.alpha * banding, params.floor, params.ceiling)


def _columns(manifest: DatasetManifest, vmaf_col: str, banding_col: str):
    for col in (vmaf_col, banding_col):
        if col not in manifest.metric_names:
            raise InputError(f"manifest has no {col!r} column")
    vmaf = manifest.column(vmaf_col)
    banding = manifest.column(banding_col)
    for col, arr in ((vmaf_col, vmaf), (banding_col, banding)):
        if np.any(np.isnan(arr)):
            bad = manifest.items[int(np.flatnonzero(np.isnan(arr))[0])].item_id
            raise InputError(f"item {bad!r} has no {col} value")
    return vmaf, banding


def fuse_dataset(manifest: DatasetManifest, params: FusionParams = FusionParams(),
                 vmaf_col: str = "vmaf", banding_col: str = "cambi",
                 out_col: str = "vmaf_ba") -> DatasetManifest:
    vmaf, banding = _columns(manifest, vmaf_col, banding_col)
    return manifest.with_metric(out_col, fuse_array(vmaf, banding, params).tolist())


def alpha_grid(lo: float = 0.0, hi: float = 2.0, step: float = 0.01) -> np.ndarray:
    if not lo < hi:
        raise InputError("grid_lo must be below grid_hi")
    if not step > 0:
        raise InputError("grid_step must be positive")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return np.round(lo + step * np.arange(n), 10)


def calibrate_alpha(manifest: DatasetManifest, grid_lo: float = 0.0, grid_hi: float = 2.0,
                    grid_step: float = 0.01, vmaf_col: str = "vmaf",
                    banding_col: str = "cambi", floor: float = 0.0,
                    ceiling: float = 100.0) -> CalibrationResult:
    """Grid-search alpha for the highest SROCC against MOS.

    SROCC is piecewise constant in alpha, so ties are common; the smallest
    alpha reaching the maximum wins.
    """
    if len(manifest) < 2:
        raise InputError("calibration needs at least 2 items")
    mos = manifest.column("mos")
    if np.all(mos == mos[0]):
        raise ComputationError("SROCC undefined: all MOS values are equal")
    vmaf, banding = _columns(manifest, vmaf_col, banding_col)
    curve = []
    for a in alpha_grid(grid_lo, grid_hi, grid_step):
        fused = fuse_array(vmaf, banding, FusionParams(float(a), floor, ceiling))
        try:
            s = stats.srocc(fused, mos)
        except stats.UndefinedStatistic:
            s = math.nan  # every item clipped to the same value
        curve.append((float(a), s))
    valid = [(a, s) for a, s in curve if not math.isnan(s)]
    if not valid:
        raise ComputationError("SROCC undefined for every alpha on the grid")
    best = max(s for _, s in valid)
    best_alpha = next(a for a, s in valid if s == best)
    return CalibrationResult(best_alpha, best, tuple(curve))
