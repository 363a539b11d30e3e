"""Descriptor bundling and retrieval engine.

Reference sets captured under different conditions are summed into a single
bundled representation per place, so query matching costs one comparison per
place regardless of how many sets were fused. The package also ships the
pooled and distance-matrix baselines, a seeded Gaussian random projection,
recall evaluation with frame tolerance, dataset-level identification, and a
synthetic benchmark generator. Storage is float32; accumulation is float64.
"""

from .errors import (
    AlignmentError,
    ConfigError,
    DimensionError,
    DuplicateSourceError,
    FormatError,
    FrameLookupError,
    HopsError,
    LeakageError,
    ValidationError,
)
from .evaluation import (
    ErrorHistogram,
    EvalConfig,
    EvalReport,
    SweepEntry,
    dimensionality_sweep,
    error_histogram,
    fusion_progression,
    identification_eval,
    leave_one_out_signatures,
    recall_at_n,
)
from .fusion import (
    FUSED_PREFIX,
    SIGNATURE_CONDITION,
    DatasetSignature,
    FusedReferenceSet,
    bundle_aligned,
    bundle_dataset,
    bundle_groups,
    bundle_incremental,
    signature_to_descriptor_set,
    to_descriptor_set,
)
from .matching import (
    AGGREGATE_MODES,
    DistanceMatrix,
    EvalCounter,
    PooledMapping,
    Ranking,
    aggregate_distances,
    best_match,
    cosine_distance_matrix,
    count_evaluations,
    export_matrix,
    identify_dataset,
    place_ranking,
    pooled_match,
    rank,
)
from .projection import ProjectionSpec, apply_matrix, materialize, project
from .rng import PinnedStream, standard_normal
from .store import (
    FORMAT_VERSION,
    INDEX_ALIGNED,
    MAGIC,
    PLACE_GROUPED,
    DatasetManifest,
    DescriptorSet,
    align_sets,
    l2_normalize,
    load_condition_sets,
    load_manifest,
    load_set,
    save_manifest,
    save_set,
)
from .synth import QUERY_CONDITION, SynthSpec, generate

__version__ = "0.1.0"

__all__ = [
    "AGGREGATE_MODES",
    "AlignmentError",
    "ConfigError",
    "DatasetManifest",
    "DatasetSignature",
    "DescriptorSet",
    "DimensionError",
    "DistanceMatrix",
    "DuplicateSourceError",
    "ErrorHistogram",
    "EvalConfig",
    "EvalCounter",
    "EvalReport",
    "FORMAT_VERSION",
    "FUSED_PREFIX",
    "FormatError",
    "FrameLookupError",
    "FusedReferenceSet",
    "HopsError",
    "INDEX_ALIGNED",
    "LeakageError",
    "MAGIC",
    "PLACE_GROUPED",
    "PinnedStream",
    "PooledMapping",
    "ProjectionSpec",
    "QUERY_CONDITION",
    "Ranking",
    "SIGNATURE_CONDITION",
    "SweepEntry",
    "SynthSpec",
    "ValidationError",
    "aggregate_distances",
    "align_sets",
    "apply_matrix",
    "best_match",
    "bundle_aligned",
    "bundle_dataset",
    "bundle_groups",
    "bundle_incremental",
    "cosine_distance_matrix",
    "count_evaluations",
    "dimensionality_sweep",
    "error_histogram",
    "export_matrix",
    "fusion_progression",
    "generate",
    "identification_eval",
    "identify_dataset",
    "l2_normalize",
    "leave_one_out_signatures",
    "load_condition_sets",
    "load_manifest",
    "load_set",
    "materialize",
    "place_ranking",
    "pooled_match",
    "project",
    "rank",
    "recall_at_n",
    "save_manifest",
    "save_set",
    "signature_to_descriptor_set",
    "standard_normal",
    "to_descriptor_set",
]
