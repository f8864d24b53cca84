"""Bit-exact dataset container: manifest, tensor files, sidecars, validation.

A dataset is a directory with a ``manifest.json`` at its root and one
directory per sample holding two latent tensors (audio and text), token
metadata, word timestamps and generated-response records. Tensor files use
a fixed little-endian binary layout so that a written tensor reads back
byte-identically on any platform:

    magic ``ALAS`` | u32 version=1 | u32 ndim=3 | 3 x u64 dims | f32 payload
"""

from __future__ import annotations

import json
import re
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import wordmap
from .wordmap import TokenMap, WordSpan, WordTimestamps

__all__ = [
    "MAGIC",
    "FORMAT_VERSION",
    "TensorFormatError",
    "BadMagicError",
    "UnsupportedVersionError",
    "BadRankError",
    "BadDimsError",
    "TruncatedFileError",
    "TrailingBytesError",
    "NaNValueError",
    "InfValueError",
    "ManifestError",
    "LatentStack",
    "SampleEntry",
    "DatasetManifest",
    "ResponseRecord",
    "Finding",
    "ValidationReport",
    "write_tensor",
    "read_tensor",
    "load_manifest",
    "load_tokens",
    "load_word_timestamps",
    "load_responses",
    "validate_dataset",
]

MAGIC = b"ALAS"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<II")
_DIMS = struct.Struct("<QQQ")

_ID_RE = re.compile(r"^[a-z0-9_-]+$")


class TensorFormatError(ValueError):
    """Base error for malformed tensor files; ``code`` names the defect."""

    code = "format"


class BadMagicError(TensorFormatError):
    code = "bad_magic"


class UnsupportedVersionError(TensorFormatError):
    code = "bad_version"


class BadRankError(TensorFormatError):
    code = "bad_rank"


class BadDimsError(TensorFormatError):
    code = "bad_dims"


class TruncatedFileError(TensorFormatError):
    code = "truncated"


class TrailingBytesError(TensorFormatError):
    code = "trailing_bytes"


class NaNValueError(TensorFormatError):
    code = "nan_values"


class InfValueError(TensorFormatError):
    code = "inf_values"


class ManifestError(ValueError):
    """The manifest itself is missing or unparseable (fatal)."""


@dataclass(frozen=True, eq=False)
class LatentStack:
    """Layer-major latent tensor for one sample and one modality.

    Index 0 along the first axis is the pre-transformer projection output;
    indices ``1..L`` are the transformer layer outputs, so a model with
    ``L`` layers stores ``L + 1`` slices. Values are 32-bit floats and must
    be finite.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float32)
        object.__setattr__(self, "data", arr)
        if arr.ndim != 3:
            raise ValueError(f"latent stack must be rank 3, got rank {arr.ndim}")
        if min(arr.shape) < 1:
            raise ValueError(f"latent stack dims must be >= 1, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("latent stack contains non-finite values")

    @property
    def num_layers_plus_one(self) -> int:
        return self.data.shape[0]

    @property
    def seq_len(self) -> int:
        return self.data.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.data.shape[2]


def write_tensor(stack: LatentStack, path) -> None:
    """Serialize a latent stack to the fixed binary container."""
    arr = stack.data
    header = MAGIC + _HEADER.pack(FORMAT_VERSION, arr.ndim) + _DIMS.pack(*arr.shape)
    payload = arr.astype("<f4", copy=False).tobytes(order="C")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def read_tensor(path) -> LatentStack:
    """Read a latent stack, rejecting every malformed or non-finite file."""
    blob = Path(path).read_bytes()
    if len(blob) < len(MAGIC):
        raise TruncatedFileError(f"{path}: file shorter than magic")
    if blob[: len(MAGIC)] != MAGIC:
        raise BadMagicError(f"{path}: bad magic {blob[:len(MAGIC)]!r}")
    off = len(MAGIC)
    if len(blob) < off + _HEADER.size:
        raise TruncatedFileError(f"{path}: truncated header")
    version, ndim = _HEADER.unpack_from(blob, off)
    off += _HEADER.size
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(f"{path}: unsupported version {version}")
    if ndim != 3:
        raise BadRankError(f"{path}: expected rank 3, header says {ndim}")
    if len(blob) < off + _DIMS.size:
        raise TruncatedFileError(f"{path}: truncated dims")
    dims = _DIMS.unpack_from(blob, off)
    off += _DIMS.size
    if min(dims) < 1:
        raise BadDimsError(f"{path}: dims must be >= 1, got {dims}")
    count = dims[0] * dims[1] * dims[2]
    expected = off + 4 * count
    if len(blob) < expected:
        raise TruncatedFileError(
            f"{path}: payload holds {(len(blob) - off) // 4} of {count} values"
        )
    if len(blob) > expected:
        raise TrailingBytesError(f"{path}: {len(blob) - expected} trailing bytes")
    flat = np.frombuffer(blob, dtype="<f4", count=count, offset=off)
    if np.isnan(flat).any():
        raise NaNValueError(f"{path}: payload contains NaN")
    if np.isinf(flat).any():
        raise InfValueError(f"{path}: payload contains Inf")
    return LatentStack(flat.reshape(dims).copy())


@dataclass(frozen=True)
class SampleEntry:
    """Manifest row pointing at one sample's files (paths relative to root)."""

    id: str
    audio_tensor_path: str
    text_tensor_path: str
    tokens_path: str
    words_path: str
    responses_path: str | None
    trimmed: bool

    @classmethod
    def from_dict(cls, d: dict) -> "SampleEntry":
        return cls(
            id=d["id"],
            audio_tensor_path=d["audio_tensor_path"],
            text_tensor_path=d["text_tensor_path"],
            tokens_path=d["tokens_path"],
            words_path=d["words_path"],
            responses_path=d.get("responses_path"),
            trimmed=bool(d["trimmed"]),
        )

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "audio_tensor_path": self.audio_tensor_path,
            "text_tensor_path": self.text_tensor_path,
            "tokens_path": self.tokens_path,
            "words_path": self.words_path,
            "responses_path": self.responses_path,
            "trimmed": self.trimmed,
        }


@dataclass(frozen=True)
class DatasetManifest:
    """Dataset-level metadata plus the sample table."""

    format_version: int
    model_name: str
    frame_duration_ms: float
    num_layers: int
    hidden_dim: int
    tokenizer_granularity: str
    task: str
    samples: tuple[SampleEntry, ...] = field(default_factory=tuple)

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetManifest":
        return cls(
            format_version=int(d["format_version"]),
            model_name=d["model_name"],
            frame_duration_ms=float(d["frame_duration_ms"]),
            num_layers=int(d["num_layers"]),
            hidden_dim=int(d["hidden_dim"]),
            tokenizer_granularity=d["tokenizer_granularity"],
            task=d["task"],
            samples=tuple(SampleEntry.from_dict(s) for s in d["samples"]),
        )

    def to_dict(self) -> dict:
        return {
            "format_version": self.format_version,
            "model_name": self.model_name,
            "frame_duration_ms": self.frame_duration_ms,
            "num_layers": self.num_layers,
            "hidden_dim": self.hidden_dim,
            "tokenizer_granularity": self.tokenizer_granularity,
            "task": self.task,
            "samples": [s.to_dict() for s in self.samples],
        }


@dataclass(frozen=True, eq=False)
class ResponseRecord:
    """Generated responses for both modalities plus similarity evidence.

    Either both sentence-embedding vectors or a precomputed similarity must
    be present so the response filter can run.
    """

    audio_response: str
    text_response: str
    audio_embedding: np.ndarray | None = None
    text_embedding: np.ndarray | None = None
    precomputed_similarity: float | None = None

    def __post_init__(self):
        for name in ("audio_embedding", "text_embedding"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, np.asarray(v, dtype=np.float32))
        has_pair = self.audio_embedding is not None and self.text_embedding is not None
        if not has_pair and self.precomputed_similarity is None:
            raise ValueError(
                "response record needs an embedding pair or a precomputed similarity"
            )
        if has_pair and len(self.audio_embedding) != len(self.text_embedding):
            raise ValueError("embedding lengths differ")
        if self.precomputed_similarity is not None:
            s = float(self.precomputed_similarity)
            if not -1.0 <= s <= 1.0:
                raise ValueError(f"precomputed similarity {s} outside [-1, 1]")


def load_manifest(root) -> DatasetManifest:
    """Load and structurally parse ``manifest.json`` under ``root``."""
    path = Path(root) / "manifest.json"
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
        return DatasetManifest.from_dict(raw)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ManifestError(f"cannot load manifest at {path}: {exc}") from exc


def load_tokens(path) -> tuple[list[str], list[str], list[int] | None]:
    """Read ``tokens.json``: token strings, word strings, optional grouping."""
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    tokens = list(raw["tokens"])
    words = list(raw["words"])
    wot = raw.get("word_of_token")
    return tokens, words, (None if wot is None else [int(v) for v in wot])


def token_map_from_file(path) -> TokenMap:
    """Build a :class:`TokenMap` from ``tokens.json``, regrouping if needed."""
    tokens, words, wot = load_tokens(path)
    if wot is not None:
        return TokenMap(tuple(tokens), tuple(wot), tuple(words))
    return wordmap.group_tokens(tokens, words)


def load_word_timestamps(path) -> WordTimestamps:
    """Read ``words.json``: the ASR word-timestamp export."""
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    return WordTimestamps(
        tuple(WordSpan(e["word"], float(e["start"]), float(e["end"])) for e in raw["words"])
    )


def load_responses(path) -> ResponseRecord:
    """Read ``responses.json`` into a validated record."""
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    return ResponseRecord(
        audio_response=raw["audio_response"],
        text_response=raw["text_response"],
        audio_embedding=raw.get("audio_embedding"),
        text_embedding=raw.get("text_embedding"),
        precomputed_similarity=raw.get("precomputed_similarity"),
    )


@dataclass(frozen=True)
class Finding:
    """One violated invariant; ``sample_id`` is None for manifest-level findings."""

    sample_id: str | None
    code: str
    message: str


@dataclass
class ValidationReport:
    findings: list[Finding] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.findings

    def add(self, sample_id: str | None, code: str, message: str) -> None:
        self.findings.append(Finding(sample_id, code, message))

    def codes(self) -> set[str]:
        return {f.code for f in self.findings}

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "findings": [
                {"sample_id": f.sample_id, "code": f.code, "message": f.message}
                for f in self.findings
            ],
        }


def _validate_manifest_fields(manifest: DatasetManifest, report: ValidationReport) -> None:
    if manifest.format_version != FORMAT_VERSION:
        report.add(None, "invalid_manifest_field",
                   f"format_version {manifest.format_version} unsupported")
    if not manifest.frame_duration_ms > 0:
        report.add(None, "invalid_manifest_field",
                   f"frame_duration_ms must be positive, got {manifest.frame_duration_ms}")
    if manifest.num_layers < 1:
        report.add(None, "invalid_manifest_field",
                   f"num_layers must be >= 1, got {manifest.num_layers}")
    if manifest.hidden_dim < 1:
        report.add(None, "invalid_manifest_field",
                   f"hidden_dim must be >= 1, got {manifest.hidden_dim}")
    if manifest.tokenizer_granularity not in ("word", "subword"):
        report.add(None, "invalid_manifest_field",
                   f"tokenizer_granularity {manifest.tokenizer_granularity!r} unknown")
    seen: set[str] = set()
    for entry in manifest.samples:
        if not entry.id or not _ID_RE.match(entry.id):
            report.add(entry.id or None, "invalid_sample_id",
                       f"sample id {entry.id!r} is not filesystem-safe")
        if entry.id in seen:
            report.add(entry.id, "duplicate_sample_id", f"sample id {entry.id!r} repeats")
        seen.add(entry.id)


def _validate_tensor(root: Path, rel: str, which: str, manifest: DatasetManifest,
                     entry: SampleEntry, report: ValidationReport) -> LatentStack | None:
    path = root / rel
    if not path.is_file():
        report.add(entry.id, "missing_file", f"{which} tensor missing: {rel}")
        return None
    try:
        stack = read_tensor(path)
    except TensorFormatError as exc:
        report.add(entry.id, f"tensor_{exc.code}", f"{which} tensor: {exc}")
        return None
    if stack.hidden_dim != manifest.hidden_dim:
        report.add(entry.id, "hidden_dim_mismatch",
                   f"{which} tensor hidden_dim {stack.hidden_dim} != manifest "
                   f"{manifest.hidden_dim}")
    if stack.num_layers_plus_one != manifest.num_layers + 1:
        report.add(entry.id, "layer_count_mismatch",
                   f"{which} tensor has {stack.num_layers_plus_one} layer slices, "
                   f"manifest implies {manifest.num_layers + 1}")
    return stack


def _validate_sample(root: Path, manifest: DatasetManifest, entry: SampleEntry,
                     report: ValidationReport) -> None:
    if not entry.trimmed:
        report.add(entry.id, "not_trimmed",
                   "instruction spans were not trimmed; sample is not scoreable")

    _validate_tensor(root, entry.audio_tensor_path, "audio", manifest, entry, report)
    text_stack = _validate_tensor(root, entry.text_tensor_path, "text", manifest, entry, report)

    tokens_path = root / entry.tokens_path
    token_map = None
    if not tokens_path.is_file():
        report.add(entry.id, "missing_file", f"tokens file missing: {entry.tokens_path}")
    else:
        try:
            token_map = token_map_from_file(tokens_path)
        except (OSError, ValueError, KeyError, TypeError) as exc:
            report.add(entry.id, "token_word_mismatch", f"tokens file invalid: {exc}")
    if token_map is not None and text_stack is not None:
        if text_stack.seq_len != token_map.num_tokens:
            report.add(entry.id, "token_count_mismatch",
                       f"text tensor has {text_stack.seq_len} rows for "
                       f"{token_map.num_tokens} tokens")

    words_path = root / entry.words_path
    if not words_path.is_file():
        report.add(entry.id, "missing_file", f"words file missing: {entry.words_path}")
    else:
        try:
            ts = load_word_timestamps(words_path)
            if not ts.entries:
                raise ValueError("no word timestamps")
        except (OSError, ValueError, KeyError, TypeError) as exc:
            report.add(entry.id, "bad_timestamps", f"words file invalid: {exc}")

    if entry.responses_path is not None:
        responses_path = root / entry.responses_path
        if not responses_path.is_file():
            report.add(entry.id, "missing_file",
                       f"responses file missing: {entry.responses_path}")
        else:
            try:
                load_responses(responses_path)
            except (OSError, ValueError, KeyError, TypeError) as exc:
                report.add(entry.id, "bad_response_record", f"responses file invalid: {exc}")


def validate_dataset(root) -> ValidationReport:
    """Check every structural invariant of a dataset on disk.

    Per-sample problems are collected, never fatal; an unreadable manifest
    raises :class:`ManifestError`. An empty report means every sample is
    structurally scoreable.
    """
    root = Path(root)
    manifest = load_manifest(root)
    report = ValidationReport()
    _validate_manifest_fields(manifest, report)
    for entry in manifest.samples:
        _validate_sample(root, manifest, entry, report)
    return report
