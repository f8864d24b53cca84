"""Automatic latent alignment scoring for speech-text multimodal LLMs.

Given layer-wise latent representations exported for paired audio and
transcription inputs, this package computes per-layer cross-modal cosine
similarity matrices, searches the maximum-similarity monotonic alignment
path through each, and scores it against a reference path built from word
timestamps. Lower scores mean the model's latents align the modalities
more like the timing ground truth.
"""

from .masalign import (
    AlignmentPath,
    EnumerationBudgetError,
    InfeasiblePathError,
    brute_force_mas,
    mas,
    path_distance,
)
from .scoring import (
    LayerReport,
    RunConfig,
    SampleScore,
    aggregate,
    build_report,
    filter_pair,
    response_similarity,
    score_dataset,
    score_sample,
)
from .simkernel import (
    SimilarityMatrix,
    ZeroNormError,
    cosine_matrix,
    layer_similarities,
    pool_to_words,
)
from .synthgen import SynthConfig, generate
from .tensorstore import (
    DatasetManifest,
    LatentStack,
    ResponseRecord,
    SampleEntry,
    ValidationReport,
    load_manifest,
    read_tensor,
    validate_dataset,
    write_tensor,
)
from .wordmap import (
    PairingError,
    ReconstructionError,
    ReferencePath,
    TokenMap,
    WordSpan,
    WordTimestamps,
    group_tokens,
    normalize_word,
    pair_words,
    timestamps_to_reference,
)

__version__ = "0.1.0"
