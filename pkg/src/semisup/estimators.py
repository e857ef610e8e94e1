"""Uniform-kernel estimators: the majority score used to pick and label
points, a uniform-kernel density estimate, and the k-NN baseline.

Scores are kept as integer pairs ``(pos, tot)``. Every comparison between
scores goes through integer cross-multiplication, never through floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InvalidInput, NoNeighbors
from .geometry import GridIndex, as_point, as_points, build_index, distances, pairwise_distances


@dataclass(frozen=True)
class Score:
    """Label-1 count ``pos`` and total count ``tot`` of labeled points in a ball."""

    pos: int
    tot: int

    def __post_init__(self):
        if not (0 <= self.pos <= self.tot):
            raise InvalidInput(f"invalid score {self.pos}/{self.tot}")

    def _check(self):
        if self.tot == 0:
            raise NoNeighbors("score has no labeled neighbors")

    @property
    def value(self) -> Fraction:
        self._check()
        return Fraction(self.pos, self.tot)

    @property
    def majority(self) -> int:
        """Size of the larger of the two label counts."""
        return max(self.pos, self.tot - self.pos)

    def more_extreme_than(self, other: "Score") -> bool:
        self._check()
        other._check()
        return self.majority * other.tot > other.majority * self.tot

    def same_extremality(self, other: "Score") -> bool:
        self._check()
        other._check()
        return self.majority * other.tot == other.majority * self.tot


def classify_from_score(s: Score) -> int:
    """1 iff the label-1 fraction is at least one half (ties go to 1)."""
    s._check()
    return int(2 * s.pos >= s.tot)


def extremality(s: Score) -> Fraction:
    """``max(eta, 1 - eta)`` as an exact fraction."""
    s._check()
    return Fraction(s.majority, s.tot)


def nw_score(labeled, center, h, idx: GridIndex | None = None) -> Score:
    """Uniform-kernel Nadaraya-Watson score at ``center``.

    Parameters
    ----------
    labeled : LabeledSet
        Training points and their 0/1 labels.
    center : array_like, shape (d,)
    h : float
        Open-ball radius.
    idx : GridIndex, optional
        Index over ``labeled.points``; built on the fly when omitted.

    Raises
    ------
    NoNeighbors
        If no labeled point lies strictly within ``h`` of ``center``.
    """
    if idx is None:
        idx = build_index(labeled.points, h)
    center = as_point(center, idx.dim, "center")
    inside = idx.query(center, h)
    if len(inside) == 0:
        raise NoNeighbors("no labeled point within h of the center")
    return Score(int(labeled.labels[inside].sum()), int(len(inside)))


def unit_ball_volume(d: int) -> float:
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


def kde_uniform(ps, u, h, idx: GridIndex | None = None) -> float:
    """Uniform-kernel density estimate ``#{X_i in B(u, h)} / (omega_d l h^d)``."""
    ps = as_points(ps)
    if not h > 0:
        raise InvalidInput("h must be positive")
    l, d = ps.shape
    u = as_point(u, d, "u")
    if idx is None:
        count = int(np.count_nonzero(distances(ps, u) < h))
    else:
        count = len(idx.query(u, h))
    return count / (unit_ball_volume(d) * l * h**d)


def knn_classify(seed, pool, k: int) -> np.ndarray:
    """Majority vote among the ``k`` nearest seed points for every pool point.

    Distance ties are resolved in favor of the lower seed index and vote ties
    go to label 1.
    """
    if len(seed) == 0:
        raise InvalidInput("empty seed set")
    if not 1 <= k <= len(seed):
        raise InvalidInput(f"k must lie in [1, {len(seed)}]")
    pool = as_points(pool, "pool")
    if pool.shape[1] != seed.points.shape[1]:
        raise InvalidInput("dimension mismatch between seed and pool")
    out = np.empty(len(pool), dtype=np.int64)
    step = max(1, (1 << 20) // max(1, len(seed) * pool.shape[1]))
    for lo in range(0, len(pool), step):
        dist = pairwise_distances(pool[lo : lo + step], seed.points)
        nearest_k = np.argsort(dist, axis=1, kind="stable")[:, :k]
        ones = seed.labels[nearest_k].sum(axis=1)
        out[lo : lo + step] = (2 * ones >= k).astype(np.int64)
    return out
