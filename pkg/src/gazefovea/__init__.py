"""Gaze-driven foveated inputs for vision-language models.

Turns (image, gaze trace, question) triples into a compact two-scale
input: a coarse view of the whole scene plus a high-resolution crop of
where the user actually looked. Ships the token/FLOP cost model and the
dual-order pairwise judging protocol used to evaluate the trade-off.
"""

from .assembly import (
    InputMode,
    ScaledView,
    TwoScaleInput,
    ViewRole,
    assemble,
    make_baseline_view,
    make_global_view,
    make_roi_view,
    snap_side,
)
from .cost import (
    BUILTIN_PROFILES,
    CostReport,
    ModelProfile,
    TokenGeometry,
    calibrate,
    count_total_tokens,
    count_visual_tokens,
    estimate_flops,
    format_reduction,
    load_profile,
    reduction_report,
)
from .dataset import (
    Manifest,
    Sample,
    canonical_json,
    export_bundle,
    load_image,
    load_manifest,
    write_manifest,
)
from .errors import GazeFoveaError
from .heatmap import (
    GazeHeatmap,
    GazeTrace,
    build_heatmap,
    default_sigma_px,
    gaussian_smooth,
    normalize,
    rasterize_trace,
    read_float_grid,
    write_float_grid,
    write_grayscale_png,
)
from .judging import (
    DeterministicMockJudge,
    EvalSummary,
    HttpJudgeClient,
    JudgeScores,
    OrderOutcome,
    PairwiseVerdict,
    Verdict,
    aggregate_dual_order,
    judge_pair,
    summarize,
    weighted_total,
    win_rate,
)
from .pipeline import RunConfig, run_prepare, run_report, run_score, run_sweep
from .roi import (
    MinSizePolicy,
    RoiBox,
    box_mass,
    enforce_min_size,
    extract_roi,
    support_mass_box,
    support_set,
)

__version__ = "0.1.0"

__all__ = [
    "BUILTIN_PROFILES",
    "CostReport",
    "DeterministicMockJudge",
    "EvalSummary",
    "GazeFoveaError",
    "GazeHeatmap",
    "GazeTrace",
    "HttpJudgeClient",
    "InputMode",
    "JudgeScores",
    "Manifest",
    "MinSizePolicy",
    "ModelProfile",
    "OrderOutcome",
    "PairwiseVerdict",
    "RoiBox",
    "RunConfig",
    "Sample",
    "ScaledView",
    "TokenGeometry",
    "TwoScaleInput",
    "Verdict",
    "ViewRole",
    "aggregate_dual_order",
    "assemble",
    "box_mass",
    "build_heatmap",
    "calibrate",
    "canonical_json",
    "count_total_tokens",
    "count_visual_tokens",
    "default_sigma_px",
    "enforce_min_size",
    "estimate_flops",
    "export_bundle",
    "extract_roi",
    "format_reduction",
    "gaussian_smooth",
    "judge_pair",
    "load_image",
    "load_manifest",
    "load_profile",
    "make_baseline_view",
    "make_global_view",
    "make_roi_view",
    "normalize",
    "rasterize_trace",
    "read_float_grid",
    "reduction_report",
    "run_prepare",
    "run_report",
    "run_score",
    "run_sweep",
    "snap_side",
    "summarize",
    "support_mass_box",
    "support_set",
    "weighted_total",
    "win_rate",
    "write_float_grid",
    "write_grayscale_png",
    "write_manifest",
]
