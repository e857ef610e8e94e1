"""Sample containers, the two simulated generators with their Bayes rules,
CSV ingestion and nearest-neighbor pruning.

Randomness always flows through ``numpy.random.Generator`` (PCG64) seeded
from a ``SeedSequence``. Replication ``r`` of an experiment with master seed
``s`` uses :func:`child_seed` ``(s, r)``, so any single replication can be
regenerated in isolation on any machine.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import stats

from .errors import DegenerateParameters, InvalidInput, ParseError
from .geometry import as_points

SINE_BAND = 0.2
SINE_FAR_WEIGHT = 7 / 8
SINE_BOUNDS = (-1.0, 1.0)


@dataclass
class LabeledSet:
    points: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.points = as_points(self.points, "labeled points", allow_empty=True)
        self.labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if len(self.labels) != len(self.points):
            raise InvalidInput("labels and points differ in length")
        if not np.all((self.labels == 0) | (self.labels == 1)):
            raise InvalidInput("labels must be 0 or 1")

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return zip(self.points, self.labels.tolist())

    @property
    def dim(self):
        return self.points.shape[1]


@dataclass
class SplitSample:
    """Labeled seed set, unlabeled pool and (optionally) the pool's true labels."""

    seed: LabeledSet
    pool: np.ndarray
    hidden_labels: np.ndarray | None = None

    def __post_init__(self):
        self.pool = as_points(self.pool, "pool")
        if len(self.seed) and self.seed.dim != self.pool.shape[1]:
            raise InvalidInput("seed and pool dimensions differ")
        if self.hidden_labels is not None:
            self.hidden_labels = np.asarray(self.hidden_labels, dtype=np.int64).reshape(-1)
            if len(self.hidden_labels) != len(self.pool):
                raise InvalidInput("hidden_labels must align with the pool")

    @property
    def dim(self):
        return self.pool.shape[1]


def child_seed(master_seed: int, rep: int) -> int:
    """64-bit seed for replication ``rep`` of a run with ``master_seed``."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(rep),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _streams(rng_seed, k):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(int(rng_seed)).spawn(k)]


# -- sine-curve example -------------------------------------------------------

def _curve(t):
    return 0.5 * np.sin(4.0 * t)


def _curve_range(lo, hi):
    """Exact min and max of ``0.5 sin(4t)`` over each interval [lo, hi]."""
    gmin = np.minimum(_curve(lo), _curve(hi))
    gmax = np.maximum(_curve(lo), _curve(hi))
    # Crests at 4t = pi/2 + 2k pi, troughs at 4t = -pi/2 + 2k pi.
    k = np.ceil((4.0 * lo - np.pi / 2) / (2 * np.pi))
    gmax = np.where((np.pi / 2 + 2 * np.pi * k) / 4.0 <= hi, 0.5, gmax)
    k = np.ceil((4.0 * lo + np.pi / 2) / (2 * np.pi))
    gmin = np.where((-np.pi / 2 + 2 * np.pi * k) / 4.0 <= hi, -0.5, gmin)
    return gmin, gmax


def sine_within(points, r) -> np.ndarray:
    """Whether each point lies within sup-norm distance ``r`` of the curve
    ``{(t, sin(4t)/2) : -1 <= t <= 1}``.

    The test is exact: it holds iff the curve's range over
    ``[x - r, x + r] ∩ [-1, 1]`` meets ``[y - r, y + r]``.
    """
    p = np.atleast_2d(np.asarray(points, dtype=float))
    x, y = p[:, 0], p[:, 1]
    lo = np.maximum(x - r, -1.0)
    hi = np.minimum(x + r, 1.0)
    gmin, gmax = _curve_range(lo, np.maximum(lo, hi))
    return (lo <= hi) & (gmin <= y + r) & (gmax >= y - r)


def sine_sup_distance(points, tol=1e-12) -> np.ndarray:
    """Sup-norm distance from each point to the sine curve, by bisection on
    the exact membership test."""
    p = np.atleast_2d(np.asarray(points, dtype=float))
    lo = np.zeros(len(p))
    hi = np.full(len(p), 4.0 + np.abs(p).max(initial=0.0))
    while np.max(hi - lo, initial=0.0) > tol:
        mid = 0.5 * (lo + hi)
        inside = sine_within(p, mid)
        hi = np.where(inside, mid, hi)
        lo = np.where(inside, lo, mid)
    return hi


def bayes_sine(p):
    """1 above the curve ``x2 = sin(4 x1) / 2``, else 0. Labels are
    deterministic in x, so this is also the Bayes rule."""
    arr = np.asarray(p, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[1] != 2:
        raise InvalidInput("bayes_sine needs 2-d points")
    out = (arr[:, 1] > _curve(arr[:, 0])).astype(np.int64)
    return int(out[0]) if single else out


def sample_sine(m: int, rng: np.random.Generator):
    """Draw ``m`` labeled points from the sine mixture.

    With probability 7/8 a point is uniform on the part of [-1, 1]^2 at
    sup-distance > 0.2 from the curve, otherwise uniform on the band within
    0.2 of it. Both uniforms come from one rejection stream over the square.
    """
    far = rng.random(m) < SINE_FAR_WEIGHT
    n_far = int(far.sum())
    n_near = m - n_far
    got_far, got_near = [], []
    c_far = c_near = 0
    batch = max(256, 2 * m)
    while c_far < n_far or c_near < n_near:
        cand = rng.uniform(-1.0, 1.0, size=(batch, 2))
        band = sine_within(cand, SINE_BAND)
        got_far.append(cand[~band])
        got_near.append(cand[band])
        c_far += int((~band).sum())
        c_near += int(band.sum())
    X = np.empty((m, 2))
    X[far] = np.concatenate(got_far)[:n_far]
    X[~far] = np.concatenate(got_near)[:n_near]
    return X, bayes_sine(X)


def _seed_draw(sampler, n, rng, per_class=None, max_tries=10_000):
    if per_class is not None:
        want = {0: int(per_class[0]), 1: int(per_class[1])}
        pts, labs = [], []
        have = {0: 0, 1: 0}
        for _ in range(max_tries):
            X, y = sampler(max(16, 4 * sum(want.values())), rng)
            for x, lab in zip(X, y.tolist()):
                if have[lab] < want[lab]:
                    have[lab] += 1
                    pts.append(x)
                    labs.append(lab)
            if have == want:
                return LabeledSet(np.array(pts), np.array(labs))
        raise DegenerateParameters("could not fill the per-class seed quota")
    if n < 2:
        raise InvalidInput("need n >= 2 so both classes can be represented")
    for _ in range(max_tries):
        X, y = sampler(n, rng)
        if 0 < y.sum() < n:
            return LabeledSet(X, y)
    raise DegenerateParameters("seed draw never contained both classes")


def gen_sine(l: int, n: int = 20, rng_seed: int = 0, per_class=None) -> SplitSample:
    """Pool of ``l`` points and ``n`` labeled seeds from the sine mixture.

    The seed draw is repeated until both classes appear. ``per_class=(n0, n1)``
    instead draws exactly that many seeds of each class.
    """
    if l < 1:
        raise InvalidInput("l must be >= 1")
    pool_rng, seed_rng = _streams(rng_seed, 2)
    X, y = sample_sine(l, pool_rng)
    seed = _seed_draw(sample_sine, n, seed_rng, per_class)
    return SplitSample(seed, X, y)


# -- truncated Gaussian example -----------------------------------------------

@dataclass(frozen=True)
class TruncGaussParams:
    """Class y is N(mu_y, diag(sigma_diag**2)) conditioned on ||Z - mu_y|| < trunc_radius.

    ``sigma_diag`` holds per-axis standard deviations.
    """

    mu0: tuple = (1.5, 1.5)
    mu1: tuple = (0.0, 0.0)
    sigma_diag: tuple = (0.6, 0.6)
    trunc_radius: float = 1.5
    p1: float = 0.5

    def __post_init__(self):
        if len(self.mu0) != len(self.mu1) or len(self.sigma_diag) != len(self.mu0):
            raise InvalidInput("mu0, mu1 and sigma_diag must share a dimension")
        if not self.trunc_radius > 0 or min(self.sigma_diag) <= 0:
            raise InvalidInput("trunc_radius and sigma_diag must be positive")

    @property
    def dim(self):
        return len(self.mu0)

    def mean(self, label):
        return np.asarray(self.mu1 if label == 1 else self.mu0, dtype=float)

    def acceptance(self) -> float:
        sd = np.asarray(self.sigma_diag, dtype=float)
        if np.all(sd == sd[0]):
            return float(stats.chi2.cdf((self.trunc_radius / sd[0]) ** 2, df=self.dim))
        z = np.random.default_rng(0).standard_normal((200_000, self.dim)) * sd
        return float(np.mean(np.sqrt(np.sum(z**2, axis=1)) < self.trunc_radius))

    def bounds(self):
        """Cube (a, b) containing both truncation balls."""
        mus = np.array([self.mu0, self.mu1], dtype=float)
        return float(mus.min() - self.trunc_radius), float(mus.max() + self.trunc_radius)


CASE1 = TruncGaussParams(mu0=(1.5, 1.5))
CASE2 = TruncGaussParams(mu0=(1.2, 1.2))
CASES = {1: CASE1, 2: CASE2}
CANONICAL_SEED = LabeledSet(np.array([[0.0, 0.0], [1.5, 1.5]]), np.array([1, 0]))


def _trunc_normal(k, mu, sd, radius, rng):
    out, have = [], 0
    while have < k:
        z = mu + sd * rng.standard_normal((max(64, 2 * (k - have)), len(mu)))
        z = z[np.sqrt(np.sum((z - mu) ** 2, axis=1)) < radius]
        out.append(z)
        have += len(z)
    return np.concatenate(out)[:k] if out else np.empty((0, len(mu)))


def sample_truncgauss(m: int, rng: np.random.Generator, params: TruncGaussParams = CASE1):
    if params.acceptance() < 1e-3:
        raise DegenerateParameters("truncation ball captures less than 1e-3 of the mass")
    y = (rng.random(m) < params.p1).astype(np.int64)
    X = np.empty((m, params.dim))
    sd = np.asarray(params.sigma_diag, dtype=float)
    for label in (0, 1):
        sel = y == label
        X[sel] = _trunc_normal(int(sel.sum()), params.mean(label), sd, params.trunc_radius, rng)
    return X, y


def gen_truncgauss(
    l: int,
    mu0=(1.5, 1.5),
    mu1=(0.0, 0.0),
    sigma_diag=(0.6, 0.6),
    trunc_radius: float = 1.5,
    rng_seed: int = 0,
    n: int | None = None,
) -> SplitSample:
    """Pool from the truncated-Gaussian mixture.

    With ``n=None`` the seed set is the fixed pair ``{((0,0),1), ((1.5,1.5),0)}``;
    otherwise ``n`` seeds are drawn from the model (both classes guaranteed).
    """
    if l < 1:
        raise InvalidInput("l must be >= 1")
    params = TruncGaussParams(tuple(mu0), tuple(mu1), tuple(sigma_diag), float(trunc_radius))
    pool_rng, seed_rng = _streams(rng_seed, 2)
    X, y = sample_truncgauss(l, pool_rng, params)
    if n is None:
        seed = LabeledSet(CANONICAL_SEED.points.copy(), CANONICAL_SEED.labels.copy())
    else:
        seed = _seed_draw(lambda k, r: sample_truncgauss(k, r, params), n, seed_rng)
    return SplitSample(seed, X, y)


def bayes_truncgauss(p, params: TruncGaussParams = CASE1):
    """Bayes rule for the truncated-Gaussian mixture with equal priors.

    Both classes share the covariance and truncation radius, hence the same
    normalising constant; inside both balls the nearer mean (Mahalanobis)
    wins, inside one ball that class wins, outside both the nearer mean wins.
    Exact ties go to label 1.
    """
    arr = np.asarray(p, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[1] != params.dim:
        raise InvalidInput("point dimension does not match the model")
    mu0, mu1 = params.mean(0), params.mean(1)
    inv_var = 1.0 / np.asarray(params.sigma_diag, dtype=float) ** 2
    in0 = np.sqrt(np.sum((arr - mu0) ** 2, axis=1)) < params.trunc_radius
    in1 = np.sqrt(np.sum((arr - mu1) ** 2, axis=1)) < params.trunc_radius
    nearer1 = np.sum((arr - mu1) ** 2 * inv_var, axis=1) <= np.sum((arr - mu0) ** 2 * inv_var, axis=1)
    out = np.where(in0 == in1, nearer1, in1).astype(np.int64)
    return int(out[0]) if single else out


def bayes_error(oracle: Callable, sampler: Callable, m: int, rng_seed: int = 0, chunk: int = 250_000) -> float:
    """Monte-Carlo estimate of ``P(oracle(X) != Y)`` from ``m`` fresh draws.

    ``sampler(k, rng)`` must return ``(X, y)`` for ``k`` draws.
    """
    if m < 1:
        raise InvalidInput("m must be >= 1")
    rng = np.random.default_rng(int(rng_seed))
    wrong = 0
    for lo in range(0, m, chunk):
        X, y = sampler(min(chunk, m - lo), rng)
        wrong += int(np.count_nonzero(np.asarray(oracle(X)) != y))
    return wrong / m


@dataclass
class GeneratorSpec:
    """Which simulated model to draw from, and how large the draw is.

    ``kind`` is ``"sine"`` or ``"truncgauss"``. For ``truncgauss``, ``case``
    picks one of the two preset mean configurations unless ``params`` is
    given, and ``n=None`` uses the fixed two-point seed set.
    """

    kind: str
    l: int
    n: int | None = 20
    case: int = 1
    params: TruncGaussParams | None = None
    per_class: tuple | None = None

    def __post_init__(self):
        if self.kind not in ("sine", "truncgauss"):
            raise InvalidInput(f"unknown generator kind {self.kind!r}")
        if self.kind == "truncgauss" and self.params is None:
            if self.case not in CASES:
                raise InvalidInput(f"unknown truncgauss case {self.case}")
            self.params = CASES[self.case]

    def draw(self, rng_seed: int) -> SplitSample:
        if self.kind == "sine":
            return gen_sine(self.l, self.n or 0, rng_seed, per_class=self.per_class)
        p = self.params
        return gen_truncgauss(self.l, p.mu0, p.mu1, p.sigma_diag, p.trunc_radius, rng_seed, n=self.n)

    def oracle(self, X):
        if self.kind == "sine":
            return bayes_sine(X)
        return bayes_truncgauss(X, self.params)

    def sampler(self, m, rng):
        if self.kind == "sine":
            return sample_sine(m, rng)
        return sample_truncgauss(m, rng, self.params)

    def bounds(self):
        return SINE_BOUNDS if self.kind == "sine" else self.params.bounds()


# -- CSV ------------------------------------------------------------------------

def _read_rows(path, header=False):
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        width = None
        for rownum, row in enumerate(reader, start=1):
            if header and rownum == 1:
                continue
            if not row or all(not c.strip() for c in row):
                continue
            try:
                vals = [float(c) for c in row]
            except ValueError:
                raise ParseError("non-numeric field", rownum) from None
            if not all(math.isfinite(v) for v in vals):
                raise ParseError("non-finite field", rownum)
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise ParseError(f"expected {width} fields, got {len(vals)}", rownum)
            rows.append((rownum, vals))
    return rows


def _split_labels(rows):
    pts, labels = [], []
    for rownum, vals in rows:
        if len(vals) < 2:
            raise ParseError("labeled rows need at least one coordinate and a label", rownum)
        lab = vals[-1]
        if lab not in (0.0, 1.0):
            raise ParseError(f"label {lab!r} is not 0 or 1", rownum)
        pts.append(vals[:-1])
        labels.append(int(lab))
    return pts, labels


def read_points(path, header=False) -> np.ndarray:
    rows = _read_rows(path, header)
    if not rows:
        return np.empty((0, 0))
    return np.array([v for _, v in rows], dtype=float)


def read_labeled(path, header=False) -> LabeledSet:
    rows = _read_rows(path, header)
    if not rows:
        raise InvalidInput(f"{path}: no labeled rows")
    pts, labels = _split_labels(rows)
    return LabeledSet(np.array(pts, dtype=float), np.array(labels))


def load_csv(seed_path, pool_path, header=False, pool_labels=False) -> SplitSample:
    """Build a SplitSample from a seed CSV (coordinates then a 0/1 label) and a
    pool CSV (coordinates only, or coordinates then a ground-truth label when
    ``pool_labels`` is set, used only for evaluation)."""
    seed = read_labeled(seed_path, header)
    rows = _read_rows(pool_path, header)
    if not rows:
        raise InvalidInput(f"{pool_path}: empty pool")
    hidden = None
    if pool_labels:
        pts, hidden = _split_labels(rows)
        pool = np.array(pts, dtype=float)
    else:
        pool = np.array([v for _, v in rows], dtype=float)
    return SplitSample(seed, pool, hidden)


def _fmt(x):
    return repr(float(x))


def write_points(path, X, labels=None):
    X = np.asarray(X, dtype=float)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for i, row in enumerate(X):
            out = [_fmt(v) for v in row]
            if labels is not None:
                out.append(str(int(labels[i])))
            w.writerow(out)


def write_sample(directory, sample: SplitSample) -> dict:
    """Write seed.csv, pool.csv and (when known) pool_labeled.csv; return the paths."""
    import os

    os.makedirs(directory, exist_ok=True)
    paths = {
        "seed": os.path.join(directory, "seed.csv"),
        "pool": os.path.join(directory, "pool.csv"),
    }
    write_points(paths["seed"], sample.seed.points, sample.seed.labels)
    write_points(paths["pool"], sample.pool)
    if sample.hidden_labels is not None:
        paths["pool_labeled"] = os.path.join(directory, "pool_labeled.csv")
        write_points(paths["pool_labeled"], sample.pool, sample.hidden_labels)
    return paths


def write_index_map(path, kept):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["original_index", "new_index"])
        for new, orig in enumerate(kept):
            w.writerow([int(orig), new])


# -- pruning ------------------------------------------------------------------

def prune_by_nn(pool, threshold: float):
    """Keep the points whose nearest other point is strictly closer than
    ``threshold``. The criterion is applied once against the full input.

    Returns the kept points and ``kept`` with ``kept[new_index] = original_index``.
    """
    X = as_points(pool, "pool")
    if len(X) < 2:
        raise InvalidInput("pruning needs at least two points")
    if not threshold > 0:
        raise InvalidInput("threshold must be positive")
    l, d = X.shape
    sq = np.sum(X**2, axis=1)
    keep = np.zeros(l, dtype=bool)
    t2 = float(threshold) ** 2
    step = max(1, (1 << 21) // l)
    for lo in range(0, l, step):
        hi = min(l, lo + step)
        # Cheap Gram screen with a rounding envelope, then exact confirmation.
        g = sq[lo:hi, None] + sq[None, :] - 2.0 * (X[lo:hi] @ X.T)
        slack = 1e-9 * (sq[lo:hi, None] + sq[None, :]) + 1e-12
        cand = g < t2 + slack
        cand[np.arange(hi - lo), np.arange(lo, hi)] = False
        for k in np.flatnonzero(cand.any(axis=1)):
            js = np.flatnonzero(cand[k])
            exact = np.sqrt(np.sum((X[js] - X[lo + k]) ** 2, axis=1))
            keep[lo + k] = bool(np.any(exact < threshold))
    kept = np.flatnonzero(keep)
    return X[kept], kept
