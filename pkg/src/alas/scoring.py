"""Per-sample alignment scoring and dataset-level aggregation.

The score of a sample at one layer is the mean absolute deviation, per
audio frame, between the maximum-similarity monotonic path through that
layer's similarity matrix and the timestamp-derived reference path. Lower
is better; 0 means the two paths coincide.

Samples whose generated responses disagree across modalities are filtered
out before scoring; per-sample failures (infeasible path, token
reconstruction, word pairing) become skip reasons instead of aborting the
batch.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import simkernel, tensorstore, wordmap
from .masalign import mas, path_distance
from .simkernel import layer_similarities
from .tensorstore import DatasetManifest, ResponseRecord, SampleEntry
from .wordmap import PairingError, ReconstructionError

__all__ = [
    "RunConfig",
    "SampleScore",
    "LayerReport",
    "SKIP_REASONS",
    "response_similarity",
    "filter_pair",
    "score_sample",
    "score_dataset",
    "aggregate",
    "build_report",
    "report_json",
]

SKIP_REASONS = ("infeasible_path", "reconstruction_failure", "pairing_failure")

DEFAULT_THRESHOLD = 0.7
THREADS_ENV_VAR = "ALAS_THREADS"


@dataclass(frozen=True)
class RunConfig:
    """Scoring parameters; validated on construction."""

    dataset_root: str = "."
    granularity: str = "word"          # word | token
    threshold: float = DEFAULT_THRESHOLD
    zero_policy: str = "error"         # error | zero
    pooling: str = "mean"              # mean | last
    normalize_alas: bool = False
    length_weighted: bool = False
    layer_selection: tuple[int, ...] | None = None
    output_dir: str | None = None

    def __post_init__(self):
        if self.granularity not in simkernel.GRANULARITIES:
            raise ValueError(f"unknown granularity {self.granularity!r}")
        if self.zero_policy not in simkernel.ZERO_POLICIES:
            raise ValueError(f"unknown zero_policy {self.zero_policy!r}")
        if self.pooling not in simkernel.POOLING_MODES:
            raise ValueError(f"unknown pooling {self.pooling!r}")
        if not -1.0 <= self.threshold <= 1.0:
            raise ValueError(f"threshold {self.threshold} outside [-1, 1]")
        if self.layer_selection is not None:
            sel = tuple(int(v) for v in self.layer_selection)
            if not sel:
                raise ValueError("layer selection must not be empty")
            if any(v < 0 for v in sel):
                raise ValueError("layer indices must be >= 0")
            object.__setattr__(self, "layer_selection", sel)

    def to_dict(self) -> dict:
        return {
            "dataset_root": str(self.dataset_root),
            "granularity": self.granularity,
            "threshold": self.threshold,
            "zero_policy": self.zero_policy,
            "pooling": self.pooling,
            "normalize_alas": self.normalize_alas,
            "length_weighted": self.length_weighted,
            "layers": list(self.layer_selection) if self.layer_selection else None,
        }


@dataclass(frozen=True)
class SampleScore:
    """Outcome for one sample: per-layer scores, or why there are none."""

    sample_id: str
    per_layer: tuple[tuple[int, float], ...] | None
    filtered_out: bool
    response_similarity: float | None
    skipped_reason: str | None = None
    num_frames: int | None = None

    def __post_init__(self):
        has_scores = self.per_layer is not None
        if has_scores == (self.filtered_out or self.skipped_reason is not None):
            raise ValueError(
                "per_layer must be present exactly when the sample is neither "
                "filtered out nor skipped"
            )
        if self.skipped_reason is not None and self.skipped_reason not in SKIP_REASONS:
            raise ValueError(f"unknown skip reason {self.skipped_reason!r}")


@dataclass(frozen=True)
class LayerReport:
    """Aggregate over contributing samples for one layer."""

    layer: int
    mean_alas: float
    std_alas: float
    n_samples: int


def response_similarity(rec: ResponseRecord) -> float:
    """Similarity of the two generated responses.

    Uses the precomputed value when present, otherwise the cosine of the
    sentence-embedding pair.
    """
    if rec.precomputed_similarity is not None:
        return float(rec.precomputed_similarity)
    a = np.asarray(rec.audio_embedding, dtype=np.float64)
    t = np.asarray(rec.text_embedding, dtype=np.float64)
    if a.shape != t.shape:
        raise ValueError("embedding lengths differ")
    na, nt = np.linalg.norm(a), np.linalg.norm(t)
    if na == 0.0 or nt == 0.0:
        raise ValueError("zero-norm response embedding")
    return float(a @ t / (na * nt))


def filter_pair(rec: ResponseRecord, threshold: float = DEFAULT_THRESHOLD) -> bool:
    """True when the sample should be kept (similarity >= threshold)."""
    return response_similarity(rec) >= threshold


def score_sample(root, entry: SampleEntry, manifest: DatasetManifest,
                 config: RunConfig) -> SampleScore:
    """Score one validated sample; failures degrade to filter/skip outcomes."""
    root = Path(root)
    sim = None
    if entry.responses_path is not None:
        rec = tensorstore.load_responses(root / entry.responses_path)
        sim = response_similarity(rec)
        if sim < config.threshold:
            return SampleScore(entry.id, None, True, sim)

    try:
        token_map = tensorstore.token_map_from_file(root / entry.tokens_path)
    except ReconstructionError:
        return SampleScore(entry.id, None, False, sim,
                           skipped_reason="reconstruction_failure")

    audio = tensorstore.read_tensor(root / entry.audio_tensor_path)
    text = tensorstore.read_tensor(root / entry.text_tensor_path)
    num_frames = audio.seq_len
    rows = token_map.num_words if config.granularity == "word" else token_map.num_tokens
    if num_frames < rows:
        return SampleScore(entry.id, None, False, sim,
                           skipped_reason="infeasible_path", num_frames=num_frames)

    timestamps = tensorstore.load_word_timestamps(root / entry.words_path)
    try:
        reference = wordmap.timestamps_to_reference(
            timestamps, num_frames, manifest.frame_duration_ms,
            token_map, config.granularity,
        )
    except PairingError:
        return SampleScore(entry.id, None, False, sim,
                           skipped_reason="pairing_failure", num_frames=num_frames)

    layers = list(config.layer_selection) if config.layer_selection else None
    matrices = layer_similarities(
        text, audio, token_map,
        granularity=config.granularity,
        zero_policy=config.zero_policy,
        pooling=config.pooling,
        layers=layers,
    )
    scale = 1.0 / max(rows - 1, 1) if config.normalize_alas else 1.0
    per_layer = tuple(
        (m.layer, path_distance(mas(m), reference) * scale) for m in matrices
    )
    return SampleScore(entry.id, per_layer, False, sim, num_frames=num_frames)


def _resolve_threads(threads: int | None) -> int:
    if threads is None:
        threads = int(os.environ.get(THREADS_ENV_VAR, "1"))
    return max(1, threads)


def score_dataset(config: RunConfig, manifest: DatasetManifest | None = None,
                  threads: int | None = None) -> list[SampleScore]:
    """Score every sample in a dataset, in sample-id order.

    ``threads`` (default: the ``ALAS_THREADS`` environment variable, else 1)
    caps worker threads; the result is identical regardless of parallelism.
    """
    root = Path(config.dataset_root)
    if manifest is None:
        manifest = tensorstore.load_manifest(root)
    if config.layer_selection is not None:
        bad = [v for v in config.layer_selection if v > manifest.num_layers]
        if bad:
            raise ValueError(
                f"layer selection {bad} out of range 0..{manifest.num_layers}"
            )
    entries = sorted(manifest.samples, key=lambda e: e.id)
    n_threads = _resolve_threads(threads)
    if n_threads == 1 or len(entries) <= 1:
        return [score_sample(root, e, manifest, config) for e in entries]
    with ThreadPoolExecutor(max_workers=n_threads) as pool:
        return list(pool.map(lambda e: score_sample(root, e, manifest, config), entries))


def aggregate(scores: list[SampleScore], length_weighted: bool = False) -> list[LayerReport]:
    """Per-layer mean/std over contributing samples.

    Contributing samples are those neither filtered out nor skipped. The
    default is an unweighted mean with population standard deviation;
    ``length_weighted`` weights each sample by its audio frame count.
    """
    contributing = [s for s in scores if s.per_layer is not None]
    if not contributing:
        raise ValueError("no contributing samples to aggregate")
    layer_ids = [layer for layer, _ in contributing[0].per_layer]
    by_layer: dict[int, list[float]] = {layer: [] for layer in layer_ids}
    weights: list[float] = []
    for s in contributing:
        if [layer for layer, _ in s.per_layer] != layer_ids:
            raise ValueError(f"sample {s.sample_id} has an inconsistent layer set")
        for layer, value in s.per_layer:
            by_layer[layer].append(value)
        weights.append(float(s.num_frames if s.num_frames else 1))
    w = np.asarray(weights)
    reports = []
    for layer in layer_ids:
        vals = np.asarray(by_layer[layer], dtype=np.float64)
        if length_weighted:
            mean = float(np.sum(w * vals) / np.sum(w))
            std = float(np.sqrt(np.sum(w * (vals - mean) ** 2) / np.sum(w)))
        else:
            mean = float(vals.mean())
            std = float(vals.std())
        reports.append(LayerReport(layer, mean, std, len(vals)))
    return reports


def _round6(value: float | None) -> float | None:
    return None if value is None else round(float(value), 6)


def build_report(config: RunConfig, scores: list[SampleScore],
                 layer_reports: list[LayerReport]) -> dict:
    """Assemble the report document with stable key order and 6-decimal floats."""
    scores = sorted(scores, key=lambda s: s.sample_id)
    skipped = {reason: 0 for reason in SKIP_REASONS}
    filtered = 0
    sample_docs = []
    for s in scores:
        if s.skipped_reason:
            skipped[s.skipped_reason] += 1
        if s.filtered_out:
            filtered += 1
        sample_docs.append({
            "sample_id": s.sample_id,
            "filtered_out": s.filtered_out,
            "response_similarity": _round6(s.response_similarity),
            "skipped_reason": s.skipped_reason,
            "per_layer": None if s.per_layer is None else [
                {"layer": layer, "alas": _round6(value)} for layer, value in s.per_layer
            ],
        })
    return {
        "config": config.to_dict(),
        "layers": [
            {
                "layer": r.layer,
                "mean_alas": _round6(r.mean_alas),
                "std_alas": _round6(r.std_alas),
                "n_samples": r.n_samples,
            }
            for r in layer_reports
        ],
        "samples": sample_docs,
        "skipped": skipped,
        "filtered": filtered,
    }


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2) + "\n"
