"""The model-agnostic extraction engine.

Runs both prompted passes per sample, trims instruction spans, collects
timestamps and response embeddings, and writes every sample atomically in
the consumer's dataset layout. Per-sample failures are logged and skipped;
the run fails only when nothing succeeds. The finished dataset is checked
with the consumer's own ``alas validate`` command, which is the interface
contract between the two packages.
"""

from __future__ import annotations

import json
import logging
import re
import shutil
import subprocess
import sys
import wave
from dataclasses import dataclass, field
from pathlib import Path

from . import container
from .adapter import CONTENT_TAG, SpeechLMAdapter

log = logging.getLogger("alas_extract")

_ID_RE = re.compile(r"^[a-z0-9_-]+$")

SAMPLE_FILES = ("audio.alas", "text.alas", "tokens.json", "words.json", "responses.json")


class ExtractionError(RuntimeError):
    """The run as a whole failed (zero successes or failed validation)."""


class SampleSkipped(RuntimeError):
    """One sample could not be extracted; carries the reason."""


@dataclass(frozen=True)
class SourceItem:
    id: str
    audio_path: str
    transcript: str

    def __post_init__(self):
        if not _ID_RE.match(self.id):
            raise ValueError(f"source id {self.id!r} is not filesystem-safe "
                             "(lowercase alphanumerics, '-', '_')")


@dataclass(frozen=True)
class ExtractionJob:
    """Everything one export run needs; mirrors the job-config JSON."""

    model: dict
    audio_prompt_template: str
    text_prompt_template: str
    output_root: str
    task: str
    sources: tuple[SourceItem, ...]
    frame_duration_ms: float | None = None  # expectation; checked against the adapter
    resume: bool = False
    validate: bool = True

    def __post_init__(self):
        for name, template in (("audio", self.audio_prompt_template),
                               ("text", self.text_prompt_template)):
            if CONTENT_TAG not in template:
                raise ValueError(f"{name} prompt template lacks the {CONTENT_TAG} tag")
        if not self.sources:
            raise ValueError("job has no sources")
        ids = [s.id for s in self.sources]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate source ids")

    @classmethod
    def from_dict(cls, doc: dict) -> "ExtractionJob":
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown job config keys: {sorted(unknown)}")
        doc = dict(doc)
        doc["sources"] = tuple(SourceItem(**s) for s in doc.get("sources", ()))
        return cls(**doc)


def _wav_duration_s(path) -> float:
    with wave.open(str(path), "rb") as fh:
        return fh.getnframes() / fh.getframerate()


def extract_sample(adapter: SpeechLMAdapter, job: ExtractionJob,
                   source: SourceItem, root: Path) -> dict:
    """Extract one sample into ``root/samples/<id>`` (atomic); returns facts."""
    transcript = source.transcript.strip()
    if not transcript:
        raise SampleSkipped("empty transcript")

    try:
        audio_cap = adapter.forward_audio(source.audio_path, job.audio_prompt_template)
        text_cap = adapter.forward_text(transcript, job.text_prompt_template)
        audio_states = audio_cap.content_states()
        text_states = text_cap.content_states()
    except ValueError as exc:
        raise SampleSkipped(f"trim/forward failure: {exc}") from exc

    try:
        timestamps = adapter.transcribe_words(source.audio_path)
    except ValueError as exc:
        raise SampleSkipped(f"timestamp pass failure: {exc}") from exc
    if not timestamps:
        raise SampleSkipped("timestamp pass produced no words")

    tokens = adapter.tokenize(transcript)
    words = adapter.words_of(transcript)
    word_of_token = adapter.group_tokens(tokens, words)
    if text_states.shape[1] != len(tokens):
        raise SampleSkipped(
            f"trim contract violated: {text_states.shape[1]} exported text rows "
            f"for {len(tokens)} transcript tokens")

    expected_frames = _wav_duration_s(source.audio_path) * 1000.0 / adapter.frame_duration_ms
    actual_frames = audio_states.shape[1]
    if expected_frames > 0 and abs(actual_frames - expected_frames) > 0.1 * expected_frames:
        log.warning("%s: adapter produced %d audio frames where ~%.0f were expected "
                    "at %.1f ms/frame", source.id, actual_frames, expected_frames,
                    adapter.frame_duration_ms)

    tmp_dir = root / "samples" / f".tmp-{source.id}"
    final_dir = root / "samples" / source.id
    if tmp_dir.exists():
        shutil.rmtree(tmp_dir)
    tmp_dir.mkdir(parents=True)
    container.write_tensor(tmp_dir / "audio.alas", audio_states)
    container.write_tensor(tmp_dir / "text.alas", text_states)
    container.write_json(tmp_dir / "tokens.json",
                         container.tokens_doc(tokens, words, word_of_token))
    container.write_json(tmp_dir / "words.json", container.words_doc(timestamps))
    container.write_json(tmp_dir / "responses.json", container.responses_doc(
        audio_cap.response, text_cap.response,
        adapter.embed_response(audio_cap.response),
        adapter.embed_response(text_cap.response),
    ))
    if final_dir.exists():
        shutil.rmtree(final_dir)
    tmp_dir.rename(final_dir)
    return {"frames": actual_frames, "tokens": len(tokens)}


def _sample_complete(root: Path, sample_id: str) -> bool:
    sdir = root / "samples" / sample_id
    return all((sdir / name).is_file() for name in SAMPLE_FILES)


def run_consumer_validation(root: Path) -> None:
    """Check the emitted dataset with the scoring package's own CLI."""
    proc = subprocess.run(
        [sys.executable, "-m", "alas", "validate", str(root)],
        capture_output=True, text=True,
    )
    if proc.returncode != 0:
        raise ExtractionError(
            f"emitted dataset failed `alas validate` (exit {proc.returncode}):\n"
            f"{proc.stderr.strip()}"
        )


def extract_dataset(adapter: SpeechLMAdapter, job: ExtractionJob) -> dict:
    """Extract every source, write the manifest, and validate the result.

    Returns run statistics: extracted, reused (resume hits), and a mapping
    of skipped source ids to reasons.
    """
    if (job.frame_duration_ms is not None
            and abs(adapter.frame_duration_ms - job.frame_duration_ms)
            > 0.1 * job.frame_duration_ms):
        log.warning("job expects %.1f ms/frame but the adapter reports %.1f",
                    job.frame_duration_ms, adapter.frame_duration_ms)

    root = Path(job.output_root)
    root.mkdir(parents=True, exist_ok=True)
    extracted, reused = [], []
    skipped: dict[str, str] = {}
    for source in job.sources:
        if job.resume and _sample_complete(root, source.id):
            log.info("%s: complete sample exists, skipping (resume)", source.id)
            reused.append(source.id)
            continue
        try:
            facts = extract_sample(adapter, job, source, root)
            log.info("%s: %d frames, %d tokens", source.id,
                     facts["frames"], facts["tokens"])
            extracted.append(source.id)
        except SampleSkipped as exc:
            log.warning("%s: skipped: %s", source.id, exc)
            skipped[source.id] = str(exc)

    ok_ids = [s.id for s in job.sources if s.id in set(extracted) | set(reused)]
    if not ok_ids:
        raise ExtractionError("no sample could be extracted")

    container.write_json(root / "manifest.json", container.manifest_doc(
        model_name=adapter.name,
        frame_duration_ms=adapter.frame_duration_ms,
        num_layers=adapter.num_layers,
        hidden_dim=adapter.hidden_dim,
        tokenizer_granularity=adapter.tokenizer_granularity,
        task=job.task,
        sample_ids=ok_ids,
    ))
    if job.validate:
        run_consumer_validation(root)
    log.info("done: %d extracted, %d reused, %d skipped",
             len(extracted), len(reused), len(skipped))
    return {"extracted": extracted, "reused": reused, "skipped": skipped}


def load_adapter(model_config: dict) -> SpeechLMAdapter:
    """Instantiate the adapter named by the job's model config."""
    kind = model_config.get("kind")
    if kind == "toy":
        from .toy_model import ToySpeechLM
        return ToySpeechLM(model_config["checkpoint"])
    raise ValueError(f"unknown model kind {kind!r}; available: ['toy'] "
                     "(real checkpoints plug in via SpeechLMAdapter)")


def load_job(path) -> ExtractionJob:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return ExtractionJob.from_dict(doc)
