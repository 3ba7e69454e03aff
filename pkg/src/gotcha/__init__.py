"""Interactive facial-image retrieval with progressive relevance feedback.

A witness holds a target face in mind; the engine shows one candidate per
round, collects per-attribute agree/disagree/skip feedback under a
progressive-disclosure budget, tracks the dialog in a recurrent model trained
with a triplet objective, and retrieves by exact nearest-neighbor search over
a precomputed feature gallery.
"""

from .config import TrainConfig, parse_schedule
from .errors import (
    ConfigError,
    EmptyScanError,
    FormatError,
    GotchaError,
    InputShapeError,
    IntegrityError,
    NumericError,
)
from .estimator import InteractiveFaceRetriever
from .evaluation import EvalReport, baseline_bounds, compare_modes, eval_rounds, ranking_percentile
from .gallery import (
    Gallery,
    GalleryRecord,
    export_jsonl,
    gen_synthetic,
    ingest_jsonl,
    load_packed,
    save_packed,
    split,
)
from .model import Dims, ModelParameters, init_parameters
from .retrieval import (
    ScanResult,
    greedy_candidate,
    initial_candidate,
    sample_candidate,
    scan_top_k,
)
from .training import Checkpoint, load_checkpoint, save_checkpoint, train, triplet_loss
from .witness import (
    DEFAULT_PROPORTIONS,
    DisclosureSchedule,
    MaskPlan,
    apply_mask,
    compute_relevance,
    default_schedule,
    make_mask_plan,
    witness_round,
)

__version__ = "0.1.0"

__all__ = [
    "Checkpoint",
    "ConfigError",
    "DEFAULT_PROPORTIONS",
    "Dims",
    "DisclosureSchedule",
    "EmptyScanError",
    "EvalReport",
    "FormatError",
    "Gallery",
    "GalleryRecord",
    "GotchaError",
    "InputShapeError",
    "IntegrityError",
    "InteractiveFaceRetriever",
    "MaskPlan",
    "ModelParameters",
    "NumericError",
    "ScanResult",
    "TrainConfig",
    "apply_mask",
    "baseline_bounds",
    "compare_modes",
    "compute_relevance",
    "default_schedule",
    "eval_rounds",
    "export_jsonl",
    "gen_synthetic",
    "greedy_candidate",
    "ingest_jsonl",
    "init_parameters",
    "initial_candidate",
    "load_checkpoint",
    "load_packed",
    "make_mask_plan",
    "parse_schedule",
    "ranking_percentile",
    "sample_candidate",
    "save_checkpoint",
    "save_packed",
    "scan_top_k",
    "split",
    "train",
    "triplet_loss",
    "witness_round",
]
