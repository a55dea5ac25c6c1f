"""vsgkit: video scene-graph toolkit on a deterministic synthetic world."""

__version__ = "0.1.0"

from .core import (
    BinaryMask,
    MaskVideo,
    Registry,
    RegistryEntry,
    Relation,
    SceneGraph,
    SceneObject,
    Trajectory,
    VideoMeta,
    rle_decode,
    rle_encode,
    validate_scene_graph,
)
from .maskops import (
    CoverageGrid,
    area,
    asym_overlap,
    bbox_of,
    complement,
    intersect,
    iou,
    morph_cleanup,
    pooled_coverage,
    union,
)
from .proposals import filter_proposals
from .resampler import (
    ResamplerParams,
    TokenFeatures,
    dual_resample,
    grad_check,
    init_params,
    resample,
)
from .sgeval import (
    BridgeJudge,
    EvalConfig,
    JudgeInterface,
    LexiconJudge,
    MatchTier,
    attribute_recall,
    average_recall,
    cohens_kappa,
    hungarian_match,
    interval_iou,
    match_tier,
    object_accuracy,
    relation_recall,
    spatiotemporal_iou,
    triplet_recall,
    verify_labels,
)
from .synthworld import (
    NoiseSpec,
    SceneSpec,
    ShapeSpec,
    generate_scene,
    noisy_proposals,
    oracle_propagator,
)
from .tokens import (
    StreamElement,
    TokenGridSpec,
    TokenIndex,
    TokenSelection,
    arrange_stream,
    coverage_scores,
    partition_windows,
    select_tokens,
)
from .tracker import (
    BreakpointReport,
    PropagatorInterface,
    TrackerConfig,
    assign_identity,
    frame_coverage_state,
    mask_coverage,
    offline_track,
    online_track,
    postfilter,
)
