"""The surface a speech-LLM integration must expose to the extraction engine.

An adapter wraps one loaded model (plus its tokenizer, timestamping ASR
pass and sentence-embedding pass) behind a small deterministic interface.
The engine stays model-agnostic: it only splices prompts, trims
instruction spans, and writes files.

Implementations for real checkpoints run the model twice per sample (one
audio-conditioned pass, one transcription-conditioned pass) capturing all
hidden-state layers plus the pre-transformer projection as layer 0, and
must exclude trailing special tokens (EOS and friends) from the exported
content span.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass

import numpy as np

# Placeholder that prompt templates use to mark where content goes.
CONTENT_TAG = "<content>"


@dataclass(frozen=True)
class ModalityCapture:
    """One forward pass: full-sequence latents plus the content span.

    ``hidden_states`` has shape ``(num_layers + 1, seq_len, hidden_dim)``
    where index 0 is the modality projection / embedding output before the
    first transformer block. ``content_span`` is the half-open position
    range of the modality content (audio frames or transcript tokens)
    inside the full prompted sequence; everything outside it is
    instruction scaffolding to trim away. ``response`` is the generated
    answer for the prompted task.
    """

    hidden_states: np.ndarray
    content_span: tuple[int, int]
    response: str

    def content_states(self) -> np.ndarray:
        lo, hi = self.content_span
        if not 0 <= lo < hi <= self.hidden_states.shape[1]:
            raise ValueError(f"content span {self.content_span} outside sequence "
                             f"of length {self.hidden_states.shape[1]}")
        return self.hidden_states[:, lo:hi]


class SpeechLMAdapter(abc.ABC):
    """Model-specific plumbing behind a deterministic, file-free interface."""

    #: model identifier recorded in the manifest
    name: str
    #: transformer layer count (manifest num_layers; tensors carry L+1 slices)
    num_layers: int
    hidden_dim: int
    #: wall-clock milliseconds represented by one audio latent position
    frame_duration_ms: float
    #: "word" when one token is one word, else "subword"
    tokenizer_granularity: str

    @abc.abstractmethod
    def tokenize(self, text: str) -> list[str]:
        """Tokenize text exactly as the model's forward pass will see it."""

    @abc.abstractmethod
    def words_of(self, text: str) -> list[str]:
        """Split text into the word units timestamps refer to."""

    @abc.abstractmethod
    def group_tokens(self, tokens: list[str], words: list[str]) -> list[int]:
        """Word index per token (identity for word-level tokenizers)."""

    @abc.abstractmethod
    def forward_audio(self, audio_path, prompt_template: str) -> ModalityCapture:
        """Audio-conditioned pass; the template's content tag marks where
        the audio goes."""

    @abc.abstractmethod
    def forward_text(self, transcript: str, prompt_template: str) -> ModalityCapture:
        """Transcription-conditioned pass (no audio input)."""

    @abc.abstractmethod
    def transcribe_words(self, audio_path) -> list[tuple[str, float, float]]:
        """Timestamping ASR pass: (word, start_s, end_s) per spoken word."""

    @abc.abstractmethod
    def embed_response(self, text: str) -> np.ndarray:
        """Sentence embedding of a generated response."""
