"""Point handling, a uniform-grid fixed-radius neighbor index and the
Hausdorff distance between finite point sets.

Points are plain numpy arrays: a single point has shape ``(d,)`` and a point
set has shape ``(l, d)``. Balls are open everywhere in the package, so a
point at distance exactly ``r`` from a center is *not* inside ``B(center, r)``.
Distances are always computed as ``sqrt(sum((a - b) ** 2))`` in double
precision; the strict comparison resolves equality at the radius.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .errors import InvalidInput

# Upper bound on the number of float64 entries materialised per distance block.
_BLOCK = 1 << 21


def as_points(x, name="points", allow_empty=False) -> np.ndarray:
    """Validate and return ``x`` as a finite float array of shape (l, d)."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1 and arr.size and not allow_empty:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise InvalidInput(f"{name}: expected a 2-d array of points, got shape {arr.shape}")
    if arr.shape[0] == 0 and not allow_empty:
        raise InvalidInput(f"{name}: empty point set")
    if arr.shape[1] < 1:
        raise InvalidInput(f"{name}: points must have dimension >= 1")
    if not np.all(np.isfinite(arr)):
        raise InvalidInput(f"{name}: non-finite coordinate")
    return arr


def as_point(x, d=None, name="point") -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1 or arr.size < 1:
        raise InvalidInput(f"{name}: expected a 1-d coordinate vector, got shape {arr.shape}")
    if d is not None and arr.size != d:
        raise InvalidInput(f"{name}: dimension {arr.size} does not match {d}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInput(f"{name}: non-finite coordinate")
    return arr


def distances(points: np.ndarray, center: np.ndarray) -> np.ndarray:
    """Euclidean distances from each row of ``points`` to ``center``."""
    return np.sqrt(np.sum((points - center) ** 2, axis=-1))


def pairwise_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum((a[:, None, :] - b[None, :, :]) ** 2, axis=-1))


def _row_chunks(n_rows, n_cols, d):
    step = max(1, _BLOCK // max(1, n_cols * d))
    for start in range(0, n_rows, step):
        yield start, min(n_rows, start + step)


def nearest(a, b, exclude_self=False):
    """For every row of ``a``, the distance to and index of its nearest row in ``b``.

    Ties go to the lowest index in ``b``. With ``exclude_self`` (``a is b``
    semantics), the diagonal is ignored so a point is never its own neighbor.
    """
    a = as_points(a, "a")
    b = as_points(b, "b")
    if a.shape[1] != b.shape[1]:
        raise InvalidInput("dimension mismatch between point sets")
    dist = np.empty(len(a))
    arg = np.empty(len(a), dtype=np.intp)
    for lo, hi in _row_chunks(len(a), len(b), a.shape[1]):
        block = pairwise_distances(a[lo:hi], b)
        if exclude_self:
            rows = np.arange(hi - lo)
            block[rows, rows + lo] = np.inf
        j = np.argmin(block, axis=1)
        arg[lo:hi] = j
        dist[lo:hi] = block[np.arange(hi - lo), j]
    return dist, arg


class GridIndex:
    """Uniform-grid bucket index answering open-ball queries.

    A point ``p`` lives in the bucket ``floor((p - origin) / cell_size)``.
    A query of radius ``r <= cell_size`` inspects the 3^d buckets around the
    center's bucket; larger radii scan ``ceil(r / cell_size)`` shells. When
    the shell block would be larger than the number of occupied buckets (high
    dimension) the query falls back to a vectorised scan of every point,
    which returns the same set.

    The index is immutable after construction.
    """

    def __init__(self, points, cell_size, origin=None):
        self.points = as_points(points)
        if not (cell_size > 0 and math.isfinite(cell_size)):
            raise InvalidInput("cell_size must be a positive finite number")
        self.cell_size = float(cell_size)
        # Buckets are a hair wider than requested so that rounding in the key
        # computation can never put two points closer than ``cell_size`` more
        # than one bucket apart.
        self._width = self.cell_size * (1 + 1e-9)
        self.dim = self.points.shape[1]
        if origin is None:
            origin = self.points.min(axis=0)
        self.origin = as_point(origin, self.dim, "origin")
        self.cells = np.floor((self.points - self.origin) / self._width).astype(np.int64)
        order = np.lexsort(self.cells.T[::-1])
        buckets: dict[tuple, list] = {}
        for i in order:
            buckets.setdefault(tuple(self.cells[i]), []).append(i)
        self.buckets = {k: np.sort(np.asarray(v, dtype=np.intp)) for k, v in buckets.items()}

    def __len__(self):
        return len(self.points)

    def cell_of(self, center) -> tuple:
        return tuple(np.floor((center - self.origin) / self._width).astype(np.int64))

    def _shells(self, r):
        return max(1, math.ceil(r / self._width))

    def _use_scan(self, shells):
        return (2 * shells + 1) ** self.dim > len(self.buckets)

    def _offsets(self, shells):
        return itertools.product(range(-shells, shells + 1), repeat=self.dim)

    def query(self, center, r) -> np.ndarray:
        """Sorted indices ``i`` with ``||points[i] - center|| < r``."""
        center = as_point(center, self.dim, "center")
        if not r > 0:
            raise InvalidInput("radius must be positive")
        shells = self._shells(r)
        if self._use_scan(shells):
            cand = np.arange(len(self.points))
        else:
            base = self.cell_of(center)
            found = [
                self.buckets[key]
                for off in self._offsets(shells)
                if (key := tuple(b + o for b, o in zip(base, off))) in self.buckets
            ]
            if not found:
                return np.empty(0, dtype=np.intp)
            cand = np.sort(np.concatenate(found))
        return cand[distances(self.points[cand], center) < r]

    def query_many(self, centers, r) -> list:
        centers = as_points(centers, "centers")
        return [self.query(c, r) for c in centers]

    def neighbor_lists(self, r) -> list:
        """For every indexed point, the sorted indices of indexed points within
        the open ball of radius ``r`` around it (the point itself included).
        """
        if not r > 0:
            raise InvalidInput("radius must be positive")
        n = len(self.points)
        out: list = [None] * n
        shells = self._shells(r)
        if self._use_scan(shells):
            for lo, hi in _row_chunks(n, n, self.dim):
                block = pairwise_distances(self.points[lo:hi], self.points) < r
                for k in range(hi - lo):
                    out[lo + k] = np.flatnonzero(block[k])
            return out
        offsets = list(self._offsets(shells))
        for key, members in self.buckets.items():
            found = [
                self.buckets[nk]
                for off in offsets
                if (nk := tuple(b + o for b, o in zip(key, off))) in self.buckets
            ]
            cand = np.sort(np.concatenate(found))
            block = pairwise_distances(self.points[members], self.points[cand]) < r
            for k, i in enumerate(members):
                out[i] = cand[block[k]]
        return out


def build_index(ps, cell_size, origin=None) -> GridIndex:
    return GridIndex(ps, cell_size, origin)


def ball_query(idx: GridIndex, center, r) -> np.ndarray:
    """Indices of the indexed points strictly within distance ``r`` of ``center``."""
    return idx.query(center, r)


def hausdorff(a, b) -> float:
    """Hausdorff distance ``max(sup_a d(x, b), sup_b d(y, a))``."""
    a = as_points(a, "a")
    b = as_points(b, "b")
    if a.shape[1] != b.shape[1]:
        raise InvalidInput("dimension mismatch between point sets")
    ab, _ = nearest(a, b)
    ba, _ = nearest(b, a)
    return float(max(ab.max(), ba.max()))
