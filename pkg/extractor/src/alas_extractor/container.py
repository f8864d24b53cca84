"""Writers for the scoring package's on-disk dataset interfaces.

The formats here mirror the consumer's published wire contract: the
little-endian `ALAS` tensor container and the manifest/sidecar JSON
schemas. Keeping an independent writer (instead of importing the scoring
library) means the final `alas validate` pass genuinely cross-checks two
implementations of the format.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"ALAS"
FORMAT_VERSION = 1


def write_tensor(path, array: np.ndarray) -> None:
    """Write a rank-3 float32 tensor in the fixed binary container."""
    arr = np.ascontiguousarray(array, dtype=np.float32)
    if arr.ndim != 3:
        raise ValueError(f"tensor must be rank 3, got {arr.ndim}")
    if min(arr.shape) < 1:
        raise ValueError(f"tensor dims must be >= 1, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("tensor contains non-finite values")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", FORMAT_VERSION, 3))
        fh.write(struct.pack("<QQQ", *arr.shape))
        fh.write(arr.astype("<f4", copy=False).tobytes(order="C"))


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")


def tokens_doc(tokens: list[str], words: list[str], word_of_token: list[int]) -> dict:
    return {"tokens": tokens, "words": words, "word_of_token": word_of_token}


def words_doc(timestamps: list[tuple[str, float, float]]) -> dict:
    return {"words": [{"word": w, "start": float(s), "end": float(e)}
                      for w, s, e in timestamps]}


def responses_doc(audio_response: str, text_response: str,
                  audio_embedding: np.ndarray, text_embedding: np.ndarray) -> dict:
    return {
        "audio_response": audio_response,
        "text_response": text_response,
        "audio_embedding": [float(v) for v in audio_embedding],
        "text_embedding": [float(v) for v in text_embedding],
        "precomputed_similarity": None,
    }


def manifest_doc(model_name: str, frame_duration_ms: float, num_layers: int,
                 hidden_dim: int, tokenizer_granularity: str, task: str,
                 sample_ids: list[str]) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "model_name": model_name,
        "frame_duration_ms": frame_duration_ms,
        "num_layers": num_layers,
        "hidden_dim": hidden_dim,
        "tokenizer_granularity": tokenizer_granularity,
        "task": task,
        "samples": [
            {
                "id": sid,
                "audio_tensor_path": f"samples/{sid}/audio.alas",
                "text_tensor_path": f"samples/{sid}/text.alas",
                "tokens_path": f"samples/{sid}/tokens.json",
                "words_path": f"samples/{sid}/words.json",
                "responses_path": f"samples/{sid}/responses.json",
                "trimmed": True,
            }
            for sid in sample_ids
        ],
    }
