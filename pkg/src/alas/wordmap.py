"""Word-boundary reconstruction and timestamp-derived reference paths.

Text-side latents arrive with one row per tokenizer token, while reference
timing is available per word. This module rebuilds the token-to-word
grouping for subword tokenizers, pairs (possibly divergent) ASR words with
the transcript words, and converts word timestamps into a per-audio-frame
reference index path.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass

import numpy as np

__all__ = [
    "TokenMap",
    "WordSpan",
    "WordTimestamps",
    "ReferencePath",
    "ReconstructionError",
    "PairingError",
    "normalize_word",
    "group_tokens",
    "pair_words",
    "timestamps_to_reference",
]


class ReconstructionError(ValueError):
    """The token stream cannot be segmented to match the word list.

    ``position`` is the index of the first token that cannot be placed.
    """

    def __init__(self, message: str, position: int):
        super().__init__(message)
        self.position = position


class PairingError(ValueError):
    """ASR words and transcript words agree on too few positions."""


def normalize_word(raw: str) -> str:
    """Normalize a word (or token concatenation) for matching.

    Applies Unicode NFC, lowercases, strips surrounding whitespace, and
    strips leading/trailing punctuation. Internal punctuation (apostrophes
    in contractions, hyphens in compounds) is kept. The result may be empty
    for punctuation-only input; the caller decides what that means.
    """
    s = unicodedata.normalize("NFC", raw).strip().lower()
    start, end = 0, len(s)
    while start < end and unicodedata.category(s[start]).startswith("P"):
        start += 1
    while end > start and unicodedata.category(s[end - 1]).startswith("P"):
        end -= 1
    return s[start:end]


@dataclass(frozen=True)
class TokenMap:
    """Token strings, their word assignment, and the word strings.

    ``word_of_token[k]`` is the word index of token ``k``. The assignment
    is contiguous and total: it starts at 0, never decreases, increments by
    at most 1, and ends at the last word index, so every word owns at least
    one contiguous span of tokens.
    """

    tokens: tuple[str, ...]
    word_of_token: tuple[int, ...]
    words: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "word_of_token", tuple(int(v) for v in self.word_of_token))
        object.__setattr__(self, "words", tuple(self.words))
        if not self.tokens or not self.words:
            raise ValueError("tokens and words must be nonempty")
        if len(self.word_of_token) != len(self.tokens):
            raise ValueError(
                f"word_of_token has {len(self.word_of_token)} entries "
                f"for {len(self.tokens)} tokens"
            )
        if self.word_of_token[0] != 0:
            raise ValueError("word_of_token must start at 0")
        if self.word_of_token[-1] != len(self.words) - 1:
            raise ValueError("word_of_token must end at the last word index")
        for a, b in zip(self.word_of_token, self.word_of_token[1:]):
            if b - a not in (0, 1):
                raise ValueError("word_of_token must be non-decreasing with steps of 0 or 1")
        for w, (lo, hi) in enumerate(self.token_spans()):
            joined = normalize_word("".join(self.tokens[lo:hi]))
            target = normalize_word(self.words[w])
            if joined != target:
                raise ValueError(
                    f"tokens {self.tokens[lo:hi]!r} do not reconstruct word "
                    f"{self.words[w]!r} ({joined!r} != {target!r})"
                )

    @property
    def num_tokens(self) -> int:
        return len(self.tokens)

    @property
    def num_words(self) -> int:
        return len(self.words)

    def token_spans(self) -> list[tuple[int, int]]:
        """Half-open token index span ``[lo, hi)`` for each word."""
        spans = []
        lo = 0
        for k in range(1, len(self.tokens) + 1):
            if k == len(self.tokens) or self.word_of_token[k] != self.word_of_token[k - 1]:
                spans.append((lo, k))
                lo = k
        return spans

    def last_token_of_word(self) -> np.ndarray:
        """Index of the final token of each word, shape ``(num_words,)``."""
        return np.asarray([hi - 1 for _, hi in self.token_spans()], dtype=np.int64)

    @classmethod
    def identity(cls, words: list[str] | tuple[str, ...]) -> "TokenMap":
        """Map for a word-level tokenizer: every token is its own word."""
        return cls(tuple(words), tuple(range(len(words))), tuple(words))


def group_tokens(tokens: list[str], words: list[str]) -> TokenMap:
    """Segment a token stream into word spans by greedy left-to-right matching.

    Tokens are accumulated into the current word until the normalized
    concatenation equals the normalized word, then the cursor advances to
    the next word. Tokens that normalize to the empty string (punctuation)
    attach to whichever word is currently being accumulated; a trailing run
    of such tokens after the final word attaches to that word.

    Raises
    ------
    ReconstructionError
        If the stream cannot be segmented; carries the position of the
        first token that cannot be placed.
    """
    if not tokens or not words:
        raise ValueError("tokens and words must be nonempty")
    norm_words = [normalize_word(w) for w in words]
    word_of_token: list[int] = []
    wi = 0
    acc = ""
    for pos, tok in enumerate(tokens):
        if wi >= len(words):
            if normalize_word(tok) == "":
                word_of_token.append(len(words) - 1)
                continue
            raise ReconstructionError(
                f"token {pos} ({tok!r}) left over after all words were matched", pos
            )
        acc += tok
        norm = normalize_word(acc)
        if norm == norm_words[wi]:
            word_of_token.append(wi)
            wi += 1
            acc = ""
        elif norm_words[wi].startswith(norm):
            word_of_token.append(wi)
        else:
            raise ReconstructionError(
                f"tokens accumulate to {norm!r} which cannot extend to word "
                f"{words[wi]!r} (word index {wi}, token index {pos})",
                pos,
            )
    if wi < len(words):
        raise ReconstructionError(
            f"token stream exhausted with {len(words) - wi} words unmatched "
            f"(next: {words[wi]!r})",
            len(tokens),
        )
    return TokenMap(tuple(tokens), tuple(word_of_token), tuple(words))


@dataclass(frozen=True)
class WordSpan:
    """One timestamped word: ``[start_s, end_s)`` in seconds."""

    word: str
    start_s: float
    end_s: float


@dataclass(frozen=True)
class WordTimestamps:
    """Word timestamps in seconds, as exported by a timestamping ASR pass."""

    entries: tuple[WordSpan, ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        prev_start = 0.0
        for e in self.entries:
            if e.start_s < 0:
                raise ValueError(f"negative start time for {e.word!r}")
            if e.end_s <= e.start_s:
                raise ValueError(f"end must exceed start for {e.word!r}")
            if e.start_s < prev_start:
                raise ValueError("word start times must be non-decreasing")
            prev_start = e.start_s

    @classmethod
    def from_pairs(cls, items: list[tuple[str, float, float]]) -> "WordTimestamps":
        return cls(tuple(WordSpan(w, s, e) for w, s, e in items))


@dataclass(frozen=True, eq=False)
class ReferencePath:
    """Ground-truth text index per audio frame.

    Indices are monotone non-decreasing, start at 0 and end at
    ``num_targets - 1``. Unlike a search path, the reference may skip
    indices (a short word can fall entirely between two frame centers).
    """

    indices: np.ndarray
    num_targets: int

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        object.__setattr__(self, "indices", idx)
        if idx.ndim != 1 or idx.size < 1:
            raise ValueError("reference path must be a nonempty 1-D index array")
        if idx[0] != 0:
            raise ValueError("reference path must start at index 0")
        if idx[-1] != self.num_targets - 1:
            raise ValueError("reference path must end at the last target index")
        if np.any(np.diff(idx) < 0):
            raise ValueError("reference path must be non-decreasing")
        if idx.min() < 0 or idx.max() >= self.num_targets:
            raise ValueError("reference path index out of range")

    def __len__(self) -> int:
        return int(self.indices.size)


def pair_words(
    whisper_words: list[str],
    tokenizer_words: list[str],
    min_coverage: float = 0.8,
) -> list[tuple[int, int]]:
    """Monotonically pair ASR words with transcript words.

    Pairs are the longest common subsequence under normalized equality, so
    insertions/deletions on either side are skipped. Words that normalize
    to the empty string carry no signal and are never paired (nor counted
    toward coverage).

    Returns a list of ``(whisper_index, tokenizer_index)`` pairs.

    Raises
    ------
    PairingError
        If fewer than ``min_coverage`` of the matchable tokenizer words
        are paired.
    """
    if not whisper_words or not tokenizer_words:
        raise ValueError("word lists must be nonempty")
    a = [normalize_word(w) for w in whisper_words]
    b = [normalize_word(w) for w in tokenizer_words]
    n, m = len(a), len(b)
    lcs = np.zeros((n + 1, m + 1), dtype=np.int32)
    for i in range(n - 1, -1, -1):
        ai = a[i]
        for j in range(m - 1, -1, -1):
            if ai and ai == b[j]:
                lcs[i, j] = lcs[i + 1, j + 1] + 1
            else:
                lcs[i, j] = max(lcs[i + 1, j], lcs[i, j + 1])
    pairs: list[tuple[int, int]] = []
    i = j = 0
    while i < n and j < m:
        if a[i] and a[i] == b[j]:
            pairs.append((i, j))
            i += 1
            j += 1
        elif lcs[i + 1, j] >= lcs[i, j + 1]:
            i += 1
        else:
            j += 1
    matchable = sum(1 for w in b if w)
    if matchable == 0 or len(pairs) < min_coverage * matchable:
        raise PairingError(
            f"paired {len(pairs)} of {matchable} transcript words "
            f"(coverage floor {min_coverage:.0%})"
        )
    return pairs


def timestamps_to_reference(
    ts: WordTimestamps,
    num_frames: int,
    frame_duration_ms: float,
    target: TokenMap,
    granularity: str = "word",
) -> ReferencePath:
    """Build the per-frame reference path from word timestamps.

    Frame ``i`` is sampled at its center time ``(i + 0.5) * frame_ms / 1000``
    and labeled with the most recently started word at that time. This
    yields the containing word inside speech, the previous word inside
    gaps, word 0 before speech starts and the last word after it ends.
    The result is forced monotone (running maximum) and endpoint-correct.

    In ``token`` granularity every word index is replaced by that word's
    last token index (the step pattern then mirrors word completion), with
    the first frame pinned to token 0 so the path still spans the full
    token range.

    Transcript words that the ASR output does not cover inherit the
    interval of the nearest paired word.
    """
    if granularity not in ("word", "token"):
        raise ValueError(f"unknown granularity {granularity!r}")
    if not ts.entries:
        raise ValueError("empty timestamp list")
    if num_frames < 1:
        raise ValueError("num_frames must be >= 1")
    if frame_duration_ms <= 0:
        raise ValueError("frame_duration_ms must be positive")

    nw = target.num_words
    pairs = pair_words([e.word for e in ts.entries], list(target.words))
    starts = np.full(nw, np.nan)
    for wi, ti in pairs:
        starts[ti] = ts.entries[wi].start_s
    paired = np.flatnonzero(~np.isnan(starts))
    for ti in np.flatnonzero(np.isnan(starts)):
        nearest = paired[np.argmin(np.abs(paired - ti))]
        starts[ti] = starts[nearest]

    final = nw - 1 if granularity == "word" else target.num_tokens - 1
    if num_frames == 1 and final > 0:
        raise ValueError(
            "cannot build a total reference path: one frame cannot both "
            "start at index 0 and end at the last index"
        )

    centers = (np.arange(num_frames, dtype=np.float64) + 0.5) * frame_duration_ms / 1000.0
    idx = np.searchsorted(starts, centers, side="right") - 1
    idx = np.clip(idx, 0, nw - 1)
    idx[0] = 0
    idx = np.maximum.accumulate(idx)
    idx[-1] = nw - 1

    if granularity == "token":
        idx = target.last_token_of_word()[idx]
        idx[0] = 0
        return ReferencePath(idx, target.num_tokens)
    return ReferencePath(idx, nw)
