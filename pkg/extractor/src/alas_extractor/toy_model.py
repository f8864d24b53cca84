"""A tiny deterministic stand-in for a speech LLM, loadable from a checkpoint.

Real 7B-parameter checkpoints are neither downloadable nor runnable in
hermetic test environments, so this adapter implements the full
:class:`~alas_extractor.adapter.SpeechLMAdapter` surface with a toy model
whose behavior is exact and reproducible:

* audio is a waveform where every word is a pure tone at a per-word
  frequency from the checkpoint vocabulary (``synthesize_speech`` writes
  such wavs);
* the "ASR pass" segments the waveform by energy and decodes each burst's
  dominant frequency back to a word, yielding genuine audio-derived word
  timestamps;
* latents are per-word unit embeddings; each "transformer layer" applies a
  fixed orthogonal mix, so layer slices differ while cross-modal geometry
  stays intact;
* prompts are spliced around a content tag and an end-of-sequence token is
  appended, so instruction trimming is exercised exactly as with a real
  model.

Everything (vocabulary, embeddings, tone table, layer mixes) lives in an
``.npz`` checkpoint created by :func:`create_checkpoint`.
"""

from __future__ import annotations

import hashlib
import wave
from pathlib import Path

import numpy as np

from .adapter import CONTENT_TAG, ModalityCapture, SpeechLMAdapter

EOS_TOKEN = "</s>"

_LETTERS = np.array(list("abcdefghijklmnopqrstuvwxyz"))


def create_checkpoint(path, seed: int = 0, vocab_size: int = 48,
                      hidden_dim: int = 32, num_layers: int = 4,
                      sample_rate: int = 16000,
                      frame_duration_ms: float = 20.0) -> Path:
    """Write a toy checkpoint: vocabulary, tone table, embeddings, layer mixes."""
    rng = np.random.default_rng(seed)
    vocab: list[str] = []
    seen = set()
    while len(vocab) < vocab_size:
        word = "".join(rng.choice(_LETTERS, size=int(rng.integers(3, 8))))
        if word not in seen:
            seen.add(word)
            vocab.append(word)
    emb = rng.standard_normal((vocab_size, hidden_dim))
    emb /= np.linalg.norm(emb, axis=1, keepdims=True)
    mix = np.empty((num_layers, hidden_dim, hidden_dim))
    for layer in range(num_layers):
        q, _ = np.linalg.qr(rng.standard_normal((hidden_dim, hidden_dim)))
        mix[layer] = q
    freqs = 220.0 + 60.0 * np.arange(vocab_size)
    if freqs.max() >= sample_rate / 2:
        raise ValueError("tone table exceeds the Nyquist frequency")
    path = Path(path)
    np.savez(
        path,
        vocab=np.array(vocab),
        emb=emb.astype(np.float32),
        mix=mix.astype(np.float32),
        freqs=freqs,
        sample_rate=np.int64(sample_rate),
        frame_duration_ms=np.float64(frame_duration_ms),
    )
    return path


def _read_wav(path) -> tuple[np.ndarray, int]:
    with wave.open(str(path), "rb") as fh:
        if fh.getnchannels() != 1 or fh.getsampwidth() != 2:
            raise ValueError("expected mono 16-bit PCM audio")
        rate = fh.getframerate()
        raw = fh.readframes(fh.getnframes())
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    return samples, rate


def _write_wav(path, samples: np.ndarray, rate: int) -> None:
    pcm = np.clip(samples, -1.0, 1.0)
    pcm = (pcm * 32767.0).astype("<i2")
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(1)
        fh.setsampwidth(2)
        fh.setframerate(rate)
        fh.writeframes(pcm.tobytes())


class ToySpeechLM(SpeechLMAdapter):
    """Checkpoint-backed toy adapter; word-level tokenizer."""

    tokenizer_granularity = "word"

    def __init__(self, checkpoint_path):
        ckpt = np.load(checkpoint_path, allow_pickle=False)
        self.vocab = [str(w) for w in ckpt["vocab"]]
        self.emb = np.asarray(ckpt["emb"], dtype=np.float64)
        self.mix = np.asarray(ckpt["mix"], dtype=np.float64)
        self.freqs = np.asarray(ckpt["freqs"], dtype=np.float64)
        self.sample_rate = int(ckpt["sample_rate"])
        self.frame_duration_ms = float(ckpt["frame_duration_ms"])
        self.num_layers = int(self.mix.shape[0])
        self.hidden_dim = int(self.emb.shape[1])
        self.name = f"toy-speech-lm-{len(self.vocab)}v-{self.hidden_dim}d"
        self._index = {w: i for i, w in enumerate(self.vocab)}

    # -- tokenizer ---------------------------------------------------------

    def tokenize(self, text: str) -> list[str]:
        return text.split()

    def words_of(self, text: str) -> list[str]:
        return text.split()

    def group_tokens(self, tokens: list[str], words: list[str]) -> list[int]:
        if tokens != words:
            raise ValueError("word-level tokenizer expects tokens == words")
        return list(range(len(words)))

    # -- latents -----------------------------------------------------------

    def _token_vector(self, token: str) -> np.ndarray:
        idx = self._index.get(token)
        if idx is not None:
            return self.emb[idx]
        # out-of-vocabulary scaffold tokens get a stable hashed embedding
        digest = hashlib.sha256(token.encode("utf-8")).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
        vec = rng.standard_normal(self.hidden_dim)
        return vec / np.linalg.norm(vec)

    def _stack_layers(self, base: np.ndarray) -> np.ndarray:
        states = np.empty((self.num_layers + 1, *base.shape))
        states[0] = base
        for layer in range(self.num_layers):
            states[layer + 1] = states[layer] @ self.mix[layer]
        return states.astype(np.float32)

    def _splice_prompt(self, template: str, content: np.ndarray
                       ) -> tuple[np.ndarray, tuple[int, int]]:
        """Locate the content tag at token level and splice latents around it."""
        if CONTENT_TAG not in template:
            raise ValueError(f"prompt template lacks the {CONTENT_TAG} tag")
        tagged = self.tokenize(template)
        tag_pos = [i for i, tok in enumerate(tagged) if tok == CONTENT_TAG]
        if len(tag_pos) != 1:
            raise ValueError("prompt template must contain the content tag as "
                             "exactly one standalone token")
        prefix = tagged[:tag_pos[0]]
        suffix = tagged[tag_pos[0] + 1:] + [EOS_TOKEN]
        rows = [self._token_vector(t) for t in prefix]
        full = np.concatenate([
            np.asarray(rows).reshape(len(prefix), self.hidden_dim),
            content,
            np.asarray([self._token_vector(t) for t in suffix]),
        ])
        span = (len(prefix), len(prefix) + content.shape[0])
        return full, span

    # -- audio front end ----------------------------------------------------

    def _bursts(self, samples: np.ndarray) -> list[tuple[int, int]]:
        """Half-open sample ranges of voiced (above-threshold) runs."""
        block = max(1, self.sample_rate // 100)  # 10 ms energy blocks
        n_blocks = len(samples) // block
        if n_blocks == 0:
            return []
        rms = np.sqrt(np.mean(
            samples[: n_blocks * block].reshape(n_blocks, block) ** 2, axis=1))
        voiced = rms > 0.02
        bursts = []
        start = None
        for i, v in enumerate(voiced):
            if v and start is None:
                start = i
            elif not v and start is not None:
                bursts.append((start * block, i * block))
                start = None
        if start is not None:
            bursts.append((start * block, n_blocks * block))
        return bursts

    def _decode_burst(self, samples: np.ndarray) -> str:
        spectrum = np.abs(np.fft.rfft(samples))
        spectrum[0] = 0.0
        peak_hz = np.argmax(spectrum) * self.sample_rate / len(samples)
        nearest = int(np.argmin(np.abs(self.freqs - peak_hz)))
        if abs(self.freqs[nearest] - peak_hz) > 25.0:
            raise ValueError(f"undecodable tone at {peak_hz:.0f} Hz")
        return self.vocab[nearest]

    def transcribe_words(self, audio_path) -> list[tuple[str, float, float]]:
        samples, rate = _read_wav(audio_path)
        if rate != self.sample_rate:
            raise ValueError(f"expected {self.sample_rate} Hz audio, got {rate}")
        out = []
        for lo, hi in self._bursts(samples):
            word = self._decode_burst(samples[lo:hi])
            out.append((word, lo / rate, hi / rate))
        return out

    def forward_audio(self, audio_path, prompt_template: str) -> ModalityCapture:
        samples, rate = _read_wav(audio_path)
        if rate != self.sample_rate:
            raise ValueError(f"expected {self.sample_rate} Hz audio, got {rate}")
        bursts = self._bursts(samples)
        if not bursts:
            raise ValueError("no speech found in audio")
        words = [self._decode_burst(samples[lo:hi]) for lo, hi in bursts]

        hop = int(round(self.sample_rate * self.frame_duration_ms / 1000.0))
        n_frames = len(samples) // hop
        starts = np.asarray([lo for lo, _ in bursts], dtype=np.float64)
        centers = (np.arange(n_frames) + 0.5) * hop
        active = np.clip(np.searchsorted(starts, centers, side="right") - 1,
                         0, len(bursts) - 1)
        frames = self.emb[[self._index[words[a]] for a in active]]

        full, span = self._splice_prompt(prompt_template, frames)
        return ModalityCapture(
            hidden_states=self._stack_layers(full),
            content_span=span,
            response="heard: " + " ".join(words),
        )

    def forward_text(self, transcript: str, prompt_template: str) -> ModalityCapture:
        tokens = self.tokenize(transcript)
        if not tokens:
            raise ValueError("empty transcript")
        rows = np.asarray([self._token_vector(t) for t in tokens])
        full, span = self._splice_prompt(prompt_template, rows)
        return ModalityCapture(
            hidden_states=self._stack_layers(full),
            content_span=span,
            response="heard: " + " ".join(self.words_of(transcript)),
        )

    def embed_response(self, text: str) -> np.ndarray:
        tokens = self.tokenize(text) or [""]
        mean = np.mean([self._token_vector(t) for t in tokens], axis=0)
        norm = np.linalg.norm(mean)
        return (mean / norm if norm else mean).astype(np.float32)

    # -- audio synthesis (inverse of the decoder; for tests and demos) ------

    def synthesize_speech(self, words: list[str], out_path,
                          amplitude: float = 0.5) -> Path:
        """Write a wav where each word is one tone burst from the tone table."""
        rate = self.sample_rate
        pieces = [np.zeros(int(0.05 * rate))]
        for word in words:
            if word not in self._index:
                raise ValueError(f"word {word!r} not in the model vocabulary")
            freq = self.freqs[self._index[word]]
            duration = 0.15 + 0.03 * (len(word) % 3)
            t = np.arange(int(duration * rate)) / rate
            tone = amplitude * np.sin(2 * np.pi * freq * t)
            fade = min(64, len(tone) // 4)
            envelope = np.ones_like(tone)
            envelope[:fade] = np.linspace(0, 1, fade)
            envelope[-fade:] = np.linspace(1, 0, fade)
            pieces.append(tone * envelope)
            pieces.append(np.zeros(int(0.06 * rate)))
        pieces.append(np.zeros(int(0.08 * rate)))
        _write_wav(out_path, np.concatenate(pieces), rate)
        return Path(out_path)
