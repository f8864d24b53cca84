"""Monotonic alignment search over a similarity matrix, plus an exhaustive oracle.

The search selects, among all paths that assign one text row to every audio
column, start at row 0, end at the last row, and move by row steps of 0 or
+1 per column, the path maximizing the summed similarity. A dynamic program
solves this in ``O(T * A)``; ``brute_force_mas`` enumerates every legal path
and exists purely so the dynamic program can be verified against it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb

import numpy as np

__all__ = [
    "AlignmentPath",
    "InfeasiblePathError",
    "EnumerationBudgetError",
    "mas",
    "brute_force_mas",
    "path_distance",
]


class InfeasiblePathError(ValueError):
    """No legal path exists: fewer audio columns than text rows."""


class EnumerationBudgetError(ValueError):
    """Brute-force enumeration would exceed the path-count budget."""


@dataclass(frozen=True, eq=False)
class AlignmentPath:
    """A monotone audio-to-text assignment and its summed similarity.

    ``indices[i]`` is the text row visited at audio column ``i``. Indices
    start at 0, end at the last row, and step by 0 or +1 between columns,
    so every row is visited at least once.
    """

    indices: np.ndarray
    score: float

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "score", float(self.score))
        if idx.ndim != 1 or idx.size < 1:
            raise ValueError("path must be a nonempty 1-D index array")
        if idx[0] != 0:
            raise ValueError("path must start at row 0")
        steps = np.diff(idx)
        if steps.size and (steps.min() < 0 or steps.max() > 1):
            raise ValueError("path steps must be 0 or +1")

    def __len__(self) -> int:
        return int(self.indices.size)


def _as_matrix(sim) -> np.ndarray:
    values = getattr(sim, "values", sim)
    values = np.asarray(values)
    if values.ndim != 2:
        raise ValueError("similarity matrix must be 2-D (text rows x audio columns)")
    if values.shape[0] < 1 or values.shape[1] < 1:
        raise ValueError("similarity matrix must be nonempty")
    if not np.all(np.isfinite(values)):
        raise ValueError("similarity matrix contains non-finite values")
    return values.astype(np.float64)


def mas(sim) -> AlignmentPath:
    """Maximum-similarity monotonic alignment path via dynamic programming.

    Accepts a ``SimilarityMatrix`` or a raw 2-D array with text rows and
    audio columns. The recurrence is

        Q[j, i] = S[j, i] + max(Q[j, i-1], Q[j-1, i-1])

    with ``Q[0, 0] = S[0, 0]`` and unreachable cells held at minus
    infinity. Backtracking starts from the last row/column; when both
    predecessors tie, the stay move (same row) is preferred, which makes
    the output reproducible and lets the exhaustive oracle match exactly.

    Raises
    ------
    InfeasiblePathError
        If there are fewer audio columns than text rows.
    """
    s = _as_matrix(sim)
    n_rows, n_cols = s.shape
    if n_cols < n_rows:
        raise InfeasiblePathError(
            f"{n_rows} text rows cannot all be visited over {n_cols} audio columns"
        )

    q = np.full((n_rows, n_cols), -np.inf)
    q[0, 0] = s[0, 0]
    shifted = np.empty(n_rows)
    for i in range(1, n_cols):
        prev = q[:, i - 1]
        shifted[0] = -np.inf
        shifted[1:] = prev[:-1]
        q[:, i] = s[:, i] + np.maximum(prev, shifted)

    indices = np.empty(n_cols, dtype=np.int64)
    j = n_rows - 1
    for i in range(n_cols - 1, 0, -1):
        indices[i] = j
        if j > 0 and q[j, i - 1] < q[j - 1, i - 1]:
            j -= 1
    indices[0] = j
    assert j == 0, "backtracking must terminate at row 0"
    return AlignmentPath(indices, float(q[n_rows - 1, n_cols - 1]))


def brute_force_mas(sim, budget: int = 10**6) -> AlignmentPath:
    """Exhaustive maximum-similarity path, for verifying :func:`mas`.

    Enumerates all ``C(A-1, T-1)`` legal paths. Scores are accumulated
    column by column in 64-bit floats, matching the dynamic program's
    addition order so agreement is bit-exact. Ties are broken exactly as
    the dynamic program's backtracking does: among equal-score paths the
    one staying on the higher row at the latest differing column wins.

    Raises
    ------
    EnumerationBudgetError
        If the number of legal paths exceeds ``budget``.
    """
    s = _as_matrix(sim)
    n_rows, n_cols = s.shape
    if n_cols < n_rows:
        raise InfeasiblePathError(
            f"{n_rows} text rows cannot all be visited over {n_cols} audio columns"
        )
    n_paths = comb(n_cols - 1, n_rows - 1)
    if n_paths > budget:
        raise EnumerationBudgetError(f"{n_paths} legal paths exceed budget {budget}")

    best_score = -np.inf
    best_path: tuple[int, ...] | None = None
    best_key: tuple[int, ...] | None = None
    for advances in itertools.combinations(range(1, n_cols), n_rows - 1):
        path = []
        j = 0
        k = 0
        for i in range(n_cols):
            if k < len(advances) and advances[k] == i:
                j += 1
                k += 1
            path.append(j)
        score = 0.0
        for i, j in enumerate(path):
            score += s[j, i]
        key = tuple(reversed(path))
        if score > best_score or (score == best_score and (best_key is None or key > best_key)):
            best_score = score
            best_path = tuple(path)
            best_key = key
    assert best_path is not None
    return AlignmentPath(np.asarray(best_path, dtype=np.int64), float(best_score))


def path_distance(pred, ref) -> float:
    """Mean absolute index deviation per audio frame between two paths.

    Accepts :class:`AlignmentPath`, ``ReferencePath`` or raw index arrays.
    The result is in text index units; 0 means the paths coincide.
    """
    p = np.asarray(getattr(pred, "indices", pred), dtype=np.int64)
    r = np.asarray(getattr(ref, "indices", ref), dtype=np.int64)
    if p.shape != r.shape:
        raise ValueError(f"path lengths differ: {p.shape} vs {r.shape}")
    if p.ndim != 1 or p.size < 1:
        raise ValueError("paths must be nonempty 1-D index arrays")
    return float(np.mean(np.abs(p - r)))
