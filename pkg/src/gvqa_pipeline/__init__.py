"""Grounded video question answering pipeline and HOTA evaluation harness."""

from .geometry import (
    BBox,
    PointAnno,
    Tracklet,
    TrackSet,
    bbox_iou,
    point_to_seed_box,
    tracklet_coverage,
)
from .dataset import (
    FrameSampling,
    GvqaQuestion,
    VideoMeta,
    load_dataset,
    sample_indices,
    sampled_to_native,
)
from .cortex import (
    CortexPrompt,
    DEFAULT_EXEMPLARS,
    FewShotExemplar,
    ParsedCortexResponse,
    build_cortex_prompt,
    parse_cortex_response,
    validate_trigger,
)
from .search import (
    GroundingOutcome,
    SearchConfig,
    reverse_play_search,
    run_search,
    sliding_window_search,
    trigger_first_search,
)
from .tracking import TrackRequest, densify_track, snap_to_grid, track_bidirectional
from .hota import (
    AlphaSweep,
    HotaBreakdown,
    compute_hota,
    compute_hota_bruteforce,
    match_frame,
    score_dataset,
)
from .simulate import (
    Scenario,
    ScenarioSuite,
    SimGrounder,
    SimNoise,
    SimReasoner,
    SimTracker,
    gen_scenario,
)
from .pipeline import (
    Backends,
    PipelineConfig,
    make_ablation_suite,
    resolve_backends,
    run_ablation,
    run_batch,
    run_question,
)

__version__ = "0.1.0"

__all__ = [
    "BBox",
    "PointAnno",
    "Tracklet",
    "TrackSet",
    "bbox_iou",
    "point_to_seed_box",
    "tracklet_coverage",
    "FrameSampling",
    "GvqaQuestion",
    "VideoMeta",
    "load_dataset",
    "sample_indices",
    "sampled_to_native",
    "CortexPrompt",
    "DEFAULT_EXEMPLARS",
    "FewShotExemplar",
    "ParsedCortexResponse",
    "build_cortex_prompt",
    "parse_cortex_response",
    "validate_trigger",
    "GroundingOutcome",
    "SearchConfig",
    "reverse_play_search",
    "run_search",
    "sliding_window_search",
    "trigger_first_search",
    "TrackRequest",
    "densify_track",
    "snap_to_grid",
    "track_bidirectional",
    "AlphaSweep",
    "HotaBreakdown",
    "compute_hota",
    "compute_hota_bruteforce",
    "match_frame",
    "score_dataset",
    "Scenario",
    "ScenarioSuite",
    "SimGrounder",
    "SimNoise",
    "SimReasoner",
    "SimTracker",
    "gen_scenario",
    "Backends",
    "PipelineConfig",
    "make_ablation_suite",
    "resolve_backends",
    "run_ablation",
    "run_batch",
    "run_question",
    "__version__",
]
