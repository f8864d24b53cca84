"""Per-layer cross-modal cosine similarity matrices.

Rows are text positions (words or tokens), columns are audio frames.
Dot products and norms are accumulated in 64-bit floats and the result is
stored in 32-bit; values are never clamped or rescaled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .wordmap import TokenMap

__all__ = [
    "SimilarityMatrix",
    "ZeroNormError",
    "cosine_matrix",
    "pool_to_words",
    "layer_similarities",
]

BOUND_SLACK = 1e-6

ZERO_POLICIES = ("error", "zero")
POOLING_MODES = ("mean", "last")
GRANULARITIES = ("word", "token")


class ZeroNormError(ValueError):
    """A latent row has zero norm, making its cosine undefined."""


@dataclass(frozen=True, eq=False)
class SimilarityMatrix:
    """Cosine similarities for one layer: text rows by audio columns."""

    layer: int
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float32)
        object.__setattr__(self, "values", v)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError("similarity values must be a nonempty 2-D array")
        if not np.all(np.isfinite(v)):
            raise ValueError("similarity values must be finite")
        if v.min() < -1.0 - BOUND_SLACK or v.max() > 1.0 + BOUND_SLACK:
            raise ValueError("similarity values out of [-1, 1] bounds")

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]


def cosine_matrix(text_rows, audio_rows, zero_policy: str = "error", layer: int = 0) -> SimilarityMatrix:
    """All-pairs cosine similarity: entry ``(j, i)`` compares text row ``j``
    with audio row ``i``.

    ``zero_policy`` decides what a zero-norm row means: ``"error"`` raises
    (a zero latent indicates an upstream extraction bug), ``"zero"`` sets
    every similarity involving that row to 0.
    """
    if zero_policy not in ZERO_POLICIES:
        raise ValueError(f"unknown zero_policy {zero_policy!r}")
    t = np.asarray(text_rows, dtype=np.float64)
    a = np.asarray(audio_rows, dtype=np.float64)
    if t.ndim != 2 or a.ndim != 2:
        raise ValueError("latent rows must be 2-D (positions x hidden dim)")
    if t.shape[1] != a.shape[1]:
        raise ValueError(f"hidden dims differ: text {t.shape[1]} vs audio {a.shape[1]}")
    if t.shape[0] < 1 or a.shape[0] < 1:
        raise ValueError("latent row sets must be nonempty")

    t_norm = np.linalg.norm(t, axis=1)
    a_norm = np.linalg.norm(a, axis=1)
    t_zero = t_norm == 0.0
    a_zero = a_norm == 0.0
    if t_zero.any() or a_zero.any():
        if zero_policy == "error":
            side = "text" if t_zero.any() else "audio"
            row = int(np.flatnonzero(t_zero if t_zero.any() else a_zero)[0])
            raise ZeroNormError(f"zero-norm {side} latent at row {row}")
        t_norm = np.where(t_zero, 1.0, t_norm)
        a_norm = np.where(a_zero, 1.0, a_norm)

    sim = (t @ a.T) / np.outer(t_norm, a_norm)
    if t_zero.any():
        sim[t_zero, :] = 0.0
    if a_zero.any():
        sim[:, a_zero] = 0.0
    return SimilarityMatrix(layer, sim.astype(np.float32))


def pool_to_words(text_rows, token_map: TokenMap, mode: str = "mean") -> np.ndarray:
    """Collapse token-level latent rows to one row per word.

    ``mean`` averages each word's token rows (accumulated in 64-bit);
    ``last`` takes the row of the word's final token. With an identity
    (word-level) map the input comes back unchanged.
    """
    if mode not in POOLING_MODES:
        raise ValueError(f"unknown pooling mode {mode!r}")
    rows = np.asarray(text_rows)
    if rows.ndim != 2:
        raise ValueError("latent rows must be 2-D (tokens x hidden dim)")
    if rows.shape[0] != token_map.num_tokens:
        raise ValueError(
            f"{rows.shape[0]} latent rows for {token_map.num_tokens} tokens"
        )
    if mode == "last":
        return rows[token_map.last_token_of_word()]
    spans = token_map.token_spans()
    acc = np.asarray(rows, dtype=np.float64)
    pooled = np.empty((token_map.num_words, rows.shape[1]), dtype=np.float64)
    for w, (lo, hi) in enumerate(spans):
        pooled[w] = acc[lo:hi].mean(axis=0)
    return pooled.astype(rows.dtype, copy=False)


def layer_similarities(
    text_stack,
    audio_stack,
    token_map: TokenMap,
    granularity: str = "word",
    zero_policy: str = "error",
    pooling: str = "mean",
    layers: list[int] | None = None,
) -> list[SimilarityMatrix]:
    """Similarity matrix per layer for one sample's pair of latent stacks.

    ``granularity`` picks the text rows: ``word`` pools token latents per
    word (see ``pooling``), ``token`` keeps raw token rows. All returned
    matrices share the same shape; the list is ordered by layer index.
    """
    if granularity not in GRANULARITIES:
        raise ValueError(f"unknown granularity {granularity!r}")
    t_data = text_stack.data
    a_data = audio_stack.data
    if t_data.shape[0] != a_data.shape[0]:
        raise ValueError(
            f"layer counts differ: text {t_data.shape[0]} vs audio {a_data.shape[0]}"
        )
    if t_data.shape[2] != a_data.shape[2]:
        raise ValueError(
            f"hidden dims differ: text {t_data.shape[2]} vs audio {a_data.shape[2]}"
        )
    if layers is None:
        layers = list(range(t_data.shape[0]))
    out = []
    for layer in layers:
        if not 0 <= layer < t_data.shape[0]:
            raise ValueError(f"layer {layer} out of range 0..{t_data.shape[0] - 1}")
        text = t_data[layer]
        if granularity == "word":
            text = pool_to_words(text, token_map, mode=pooling)
        out.append(cosine_matrix(text, a_data[layer], zero_policy=zero_policy, layer=layer))
    return out
