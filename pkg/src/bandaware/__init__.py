"""Banding-aware video quality toolkit."""
from .banding import BandingParams, BandingReport, frame_banding_index, sequence_banding_index
from .errors import BandawareError, ComputationError, InputError, UsageError
from .fusion import CalibrationResult, FusionParams, calibrate_alpha, fuse, fuse_dataset
from .harness import DatasetManifest, EvalReport, evaluate, load_manifest, write_report
from .media import FrameSequence, LumaPlane, read_raw_yuv, read_y4m
from .stats import auc_bw, plcc, ranks, significant_pairs, srocc
from .subjective import MosEstimate, ScoreMatrix, plain_mos, reliability_compare, solve_mle

__version__ = "0.1.0"
