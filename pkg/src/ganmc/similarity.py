"""Track similarity scoring and retention of the most market-like samples.

Similarity between two equal-length tracks is the mean of
1 - |x_i - y_i| / (|x_i| + |y_i|), which lies in [0, 1] for nonnegative
inputs and is invariant under a common rescaling of both tracks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class SimilarityError(ValueError):
    pass


@dataclass(frozen=True)
class SimilarityRanking:
    """Per-track scores, ascending-score order, and the retained index set."""

    scores: np.ndarray    # shape (N2,), in [0, 1]
    order: np.ndarray     # permutation of 0..N2-1, non-decreasing scores
    selected: np.ndarray  # 0-based indices of retained tracks (highest scores)

    def __post_init__(self):
        if len(self.selected) < 1:
            raise SimilarityError("retained index set is empty")


def tsim(x, y) -> float:
    """Mean per-element similarity of two equal-length tracks; 1.0 means identical."""
    xv = np.asarray(x, dtype=float)
    yv = np.asarray(y, dtype=float)
    if xv.ndim != 1 or yv.ndim != 1:
        raise SimilarityError("tsim expects 1-D inputs")
    if xv.shape != yv.shape:
        raise SimilarityError(f"length mismatch: {xv.shape[0]} vs {yv.shape[0]}")
    if xv.shape[0] == 0:
        raise SimilarityError("empty vectors")
    denom = np.abs(xv) + np.abs(yv)
    with np.errstate(invalid="ignore", divide="ignore"):
        term = 1.0 - np.abs(xv - yv) / denom
    # both entries zero: identical values, similarity 1
    term = np.where(denom == 0.0, 1.0, term)
    return float(term.mean())


def retained_count(n2: int, alpha: float) -> int:
    """Size of the retained set: N2 - ceil(alpha * N2) + 1."""
    return n2 - math.ceil(alpha * n2) + 1


def rank_and_select(tracks, reference, alpha: float) -> SimilarityRanking:
    """Score every track against the reference window and keep the top tail.

    Tracks are sorted by ascending similarity (ties broken by original
    index, ascending); the retained set is the trailing slice of that
    order, i.e. the most similar tracks.
    """
    if not (0.0 < alpha < 1.0):
        raise SimilarityError(f"alpha must be in (0,1), got {alpha}")
    mat = np.asarray(tracks, dtype=float)
    if mat.ndim != 2 or mat.shape[0] < 1:
        raise SimilarityError("tracks must be a nonempty 2-D array")
    ref = np.asarray(reference, dtype=float)
    if ref.shape != (mat.shape[1],):
        raise SimilarityError(
            f"reference length {ref.shape[0]} != track length {mat.shape[1]}"
        )
    scores = np.array([tsim(row, ref) for row in mat])
    order = np.argsort(scores, kind="stable")
    n2 = mat.shape[0]
    keep = retained_count(n2, alpha)
    selected = order[n2 - keep :]
    return SimilarityRanking(scores=scores, order=order, selected=selected)
