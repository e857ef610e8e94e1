"""Self-training by repeatedly labeling the best classifiable point.

At every step the candidates are the unlabeled pool points strictly within
``h`` of some already labeled point (seed or pool). Each candidate carries a
score ``(pos, tot)`` counting label-1 and all labeled points in its open
``h``-ball. The engine picks the candidate whose majority fraction
``max(pos, tot - pos) / tot`` is largest, breaks ties by the number of pool
points in its ball, then by lowest pool index, and labels it ``1`` iff
``2 pos >= tot``.

The batch variant labels, in one step, every candidate that ties on both
the majority fraction and the ball count, all scored against the training
set as it stood before the step.

Scores are updated incrementally: labeling a point changes only the scores
of pool points inside its ``h``-ball, so only those are re-queued in a
lazily invalidated max-heap.
"""

from __future__ import annotations

import csv
import heapq
import io
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .datasets import SplitSample
from .errors import InvalidInput
from .estimators import Score
from .geometry import as_points, build_index, nearest

VARIANTS = ("sequential", "batch")
FALLBACKS = ("none", "nn")


@dataclass
class RunConfig:
    h: float
    variant: str = "sequential"
    fallback: str = "none"
    grid_n: int | None = None
    grid_bounds: tuple | None = None
    rng_seed: int = 0  # reserved, the engine is deterministic

    def __post_init__(self):
        if not self.h > 0:
            raise InvalidInput("h must be positive")
        if self.variant not in VARIANTS:
            raise InvalidInput(f"variant must be one of {VARIANTS}")
        if self.fallback not in FALLBACKS:
            raise InvalidInput(f"fallback must be one of {FALLBACKS}")
        if self.grid_n is not None and self.grid_n < 2:
            raise InvalidInput("grid_n must be >= 2")


class Event(NamedTuple):
    pool_index: int
    label: int
    step: int | None  # None: labeled by the 1-NN fallback after a stall
    score: Score
    stalled: bool = False


@dataclass
class Trace:
    l: int
    events: list = field(default_factory=list)
    unclassified: list = field(default_factory=list)
    tie_breaks: int = 0

    def labels(self, fill=-1) -> np.ndarray:
        out = np.full(self.l, fill, dtype=np.int64)
        for e in self.events:
            out[e.pool_index] = e.label
        return out

    def steps(self) -> np.ndarray:
        """Step at which each pool point was labeled; -1 if never, 0 for fallback."""
        out = np.full(self.l, -1, dtype=np.int64)
        for e in self.events:
            out[e.pool_index] = 0 if e.step is None else e.step
        return out

    @property
    def n_steps(self) -> int:
        return max((e.step for e in self.events if e.step is not None), default=0)

    @property
    def stalled_count(self) -> int:
        return len(self.unclassified) + sum(e.stalled for e in self.events)

    def write_csv(self, fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["pool_index", "label", "step", "score_pos", "score_tot", "stalled"])
        for e in self.events:
            step = "inf" if e.step is None else e.step
            w.writerow([e.pool_index, e.label, step, e.score.pos, e.score.tot, int(e.stalled)])
        for i in self.unclassified:
            w.writerow([i, "", "", "", "", 1])

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        return text


def _check(sample: SplitSample, cfg: RunConfig):
    if len(sample.seed) == 0:
        raise InvalidInput("empty seed set")
    if sample.seed.dim != sample.dim:
        raise InvalidInput("seed and pool dimensions differ")


def _engine(pool, seed_points, seed_labels, h, batch, ball=None):
    """Core loop. Returns (events, labeled mask, tie-break count).

    ``ball`` overrides the per-candidate tie-break counts, which default to
    the number of ``pool`` points in each candidate's ball.
    """
    l = len(pool)
    idx = build_index(pool, h)
    nbrs = [a.tolist() for a in idx.neighbor_lists(h)]
    if ball is None:
        ball = [len(a) for a in nbrs]

    pos = [0] * l
    tot = [0] * l
    for s, y in zip(seed_points, seed_labels):
        for q in idx.query(s, h).tolist():
            tot[q] += 1
            pos[q] += y

    # Integer ranking of max(p, t-p)/t: distinct fractions with denominators
    # <= Q differ by >= 1/Q^2, so floor(frac * Q^2) is strictly monotone.
    scale = (len(seed_points) + l) ** 2

    def entry(i):
        p, t = pos[i], tot[i]
        return (-((max(p, t - p) * scale) // t), -ball[i], i, p, t)

    heap = [entry(i) for i in range(l) if tot[i] > 0]
    heapq.heapify(heap)
    labeled = bytearray(l)
    events = []
    ties = 0
    step = 0

    def drop_stale():
        while heap and (labeled[heap[0][2]] or tot[heap[0][2]] != heap[0][4]):
            heapq.heappop(heap)

    while True:
        drop_stale()
        if not heap:
            break
        step += 1
        top = heapq.heappop(heap)
        group = [top]
        drop_stale()
        if batch:
            while heap and heap[0][0] == top[0] and heap[0][1] == top[1]:
                group.append(heapq.heappop(heap))
                drop_stale()
        elif heap and heap[0][0] == top[0] and heap[0][1] == top[1]:
            ties += 1

        new = []
        for _, _, i, p, t in group:
            y = 1 if 2 * p >= t else 0
            labeled[i] = 1
            events.append(Event(i, y, step, Score(p, t)))
            new.append((i, y))
        for i, y in new:
            for q in nbrs[i]:
                if not labeled[q]:
                    tot[q] += 1
                    pos[q] += y
                    heapq.heappush(heap, entry(q))
    return events, labeled, ties


def _finish(sample, events, labeled, ties, cfg) -> Trace:
    l = len(sample.pool)
    rest = [i for i in range(l) if not labeled[i]]
    trace = Trace(l=l, events=events, tie_breaks=ties)
    if rest and cfg.fallback == "nn":
        done = [e.pool_index for e in events]
        train = np.concatenate([sample.seed.points, sample.pool[done]]) if done else sample.seed.points
        train_labels = np.concatenate([sample.seed.labels, np.array([e.label for e in events], dtype=np.int64)])
        _, arg = nearest(sample.pool[rest], train)
        for i, j in zip(rest, arg.tolist()):
            trace.events.append(Event(i, int(train_labels[j]), None, Score(0, 0), True))
    else:
        trace.unclassified = rest
    return trace


def _run(sample: SplitSample, cfg: RunConfig, batch: bool) -> Trace:
    _check(sample, cfg)
    events, labeled, ties = _engine(sample.pool, sample.seed.points, sample.seed.labels.tolist(), cfg.h, batch)
    return _finish(sample, events, labeled, ties, cfg)


def run_sequential(sample: SplitSample, cfg: RunConfig) -> Trace:
    """Label one point per step until the pool is exhausted or nothing is
    within ``h`` of the labeled set (a stall)."""
    return _run(sample, cfg, batch=False)


def run_batch(sample: SplitSample, cfg: RunConfig) -> Trace:
    return _run(sample, cfg, batch=True)


# -- grid projection ----------------------------------------------------------

@dataclass
class GridProjection:
    """Occupied cells of an N-per-axis grid over ``(lo, hi]``.

    ``cells`` maps integer cell coordinates to ``(corner, members)`` where
    ``corner`` is the lower grid point ``a`` of the half-open cell
    ``prod (a_j, a_j + w_j]`` and ``members`` are sorted pool indices.
    """

    cells: dict
    n_per_axis: int
    lo: np.ndarray
    hi: np.ndarray

    def edge(self, k):
        k = np.asarray(k)
        return self.lo + k * (self.hi - self.lo) / self.n_per_axis

    def contains(self, key, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(self.edge(key) < x) and np.all(x <= self.edge(np.asarray(key) + 1)))

    def keys(self):
        return sorted(self.cells)

    def representatives(self) -> np.ndarray:
        return np.array([self.cells[k][0] for k in self.keys()])


def _resolve_bounds(pool, bounds):
    d = pool.shape[1]
    if bounds is None:
        return pool.min(axis=0) - 1e-9, pool.max(axis=0) + 1e-9
    a, b = bounds
    lo = np.broadcast_to(np.asarray(a, dtype=float), (d,)).copy()
    hi = np.broadcast_to(np.asarray(b, dtype=float), (d,)).copy()
    if np.any(lo >= hi):
        raise InvalidInput("grid bounds must satisfy a < b")
    return lo, hi


def grid_project(pool, n_per_axis: int, bounds=None) -> GridProjection:
    """Collapse the pool onto the occupied cells of an N-grid.

    ``bounds`` is ``(a, b)`` with scalars (a cube) or per-axis sequences;
    by default the bounding box of the pool widened by 1e-9.
    """
    pool = as_points(pool, "pool")
    if n_per_axis < 2:
        raise InvalidInput("n_per_axis must be >= 2")
    lo, hi = _resolve_bounds(pool, bounds)
    if np.any(pool <= lo) or np.any(pool > hi):
        raise InvalidInput("pool point outside the grid bounds (a, b]")
    N = int(n_per_axis)
    width = (hi - lo) / N

    def edge(k):
        return lo + k * (hi - lo) / N

    k = np.ceil((pool - lo) / width).astype(np.int64) - 1
    k = np.clip(k, 0, N - 1)
    # Snap to the same edge formula used by membership tests.
    for _ in range(2):
        k = np.where(pool <= edge(k), k - 1, k)
        k = np.where(pool > edge(k + 1), k + 1, k)
    k = np.clip(k, 0, N - 1)
    members: dict = {}
    for i, key in enumerate(map(tuple, k.tolist())):
        members.setdefault(key, []).append(i)
    cells = {key: (edge(np.asarray(key)), np.asarray(m, dtype=np.intp)) for key, m in members.items()}
    return GridProjection(cells, N, lo, hi)


def grid_n_for_step(bounds, step: float) -> int:
    """Smallest N whose cell width over ``(a, b)`` does not exceed ``step``."""
    a, b = bounds
    return max(2, int(np.ceil((float(np.max(b)) - float(np.min(a))) / step - 1e-9)))


def run_fast(sample: SplitSample, cfg: RunConfig) -> Trace:
    """Run on the grid corners of occupied cells, then give every pool point
    its cell's label (and step and score).

    Corners stand in for the pool as candidates and as labeled training
    points. The ball-count tie-break still counts the original pool points
    within ``h`` of each corner, so the collapsed run keeps the density
    information that separates dense class interiors from the sparse border.
    """
    if cfg.grid_n is None:
        raise InvalidInput("run_fast needs cfg.grid_n")
    _check(sample, cfg)
    proj = grid_project(sample.pool, cfg.grid_n, cfg.grid_bounds)
    keys = proj.keys()
    reps = np.array([proj.cells[k][0] for k in keys])
    inner = SplitSample(sample.seed, reps)
    pool_idx = build_index(sample.pool, cfg.h)
    ball = [len(pool_idx.query(c, cfg.h)) for c in reps]
    events, labeled, ties = _engine(
        reps, sample.seed.points, sample.seed.labels.tolist(), cfg.h, cfg.variant == "batch", ball
    )
    inner_trace = _finish(inner, events, labeled, ties, cfg)

    trace = Trace(l=len(sample.pool), tie_breaks=inner_trace.tie_breaks)
    for e in inner_trace.events:
        for i in proj.cells[keys[e.pool_index]][1].tolist():
            trace.events.append(e._replace(pool_index=i))
    for r in inner_trace.unclassified:
        trace.unclassified.extend(proj.cells[keys[r]][1].tolist())
    trace.unclassified.sort()
    return trace


def run(sample: SplitSample, cfg: RunConfig) -> Trace:
    if cfg.grid_n is not None:
        return run_fast(sample, cfg)
    if cfg.variant == "batch":
        return run_batch(sample, cfg)
    return run_sequential(sample, cfg)
