"""Runnable checks of the conditions under which self-training is expected
to work: covering of class regions by small balls, a density valley between
class interiors and the class border, a well-placed seed set, and the
"first mistake happens at the border" property of a finished run.

Region predicates are vectorised callables mapping an ``(m, d)`` array to an
``(m,)`` boolean array. Reports serialize with :meth:`to_dict`.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import EmptyRegion, InvalidInput
from .geometry import as_points, build_index, nearest


def probe_grid(bounds, step) -> np.ndarray:
    """Regular grid ``lo + k * step`` (per axis) covering ``[lo, hi]``."""
    lo = np.atleast_1d(np.asarray(bounds[0], dtype=float))
    hi = np.atleast_1d(np.asarray(bounds[1], dtype=float))
    lo, hi = np.broadcast_arrays(lo, hi)
    if not step > 0:
        raise InvalidInput("probe step must be positive")
    axes = [a + step * np.arange(int(np.floor((b - a) / step + 1e-9)) + 1) for a, b in zip(lo, hi)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


@dataclass
class CoveringReport:
    holds: bool
    worst_gap: float
    h: float
    n_probes: int

    def to_dict(self):
        return asdict(self)


def covering_check(region_members, region_test, h, probe_grid_step, bounds) -> CoveringReport:
    """Does every probe point of the region lie within ``h/2`` of a member?

    Probes are the points of a regular grid over ``bounds`` accepted by
    ``region_test``; ``worst_gap`` is the largest probe-to-nearest-member
    distance.
    """
    members = as_points(region_members, "region_members")
    if probe_grid_step > h / 4:
        raise InvalidInput("probe_grid_step must be <= h/4")
    probes = probe_grid(bounds, probe_grid_step)
    probes = probes[np.asarray(region_test(probes), dtype=bool)]
    if len(probes) == 0:
        raise EmptyRegion("no probe point satisfies the region predicate")
    gaps, _ = nearest(probes, members)
    worst = float(gaps.max())
    return CoveringReport(holds=worst < h / 2, worst_gap=worst, h=float(h), n_probes=len(probes))


@dataclass
class ValleyReport:
    holds: bool
    margin: int
    min_interior_count: int
    max_border_count: int
    h: float
    delta: float

    def to_dict(self):
        return asdict(self)


def ball_counts(pool, probes, h) -> np.ndarray:
    """Number of pool points in the open ``h``-ball around each probe."""
    idx = build_index(pool, h)
    return np.array([len(idx.query(p, h)) for p in as_points(probes, "probes")], dtype=np.int64)


def valley_check(pool, interior_probes, border_probes, h, interior=None, border=None, delta=None) -> ValleyReport:
    """Compare ball counts over interior probes against border probes.

    Holds iff the smallest interior count is at least the largest border
    count; ``margin`` is their difference. Optional predicates filter the
    probe sets first. ``delta`` (interior depth) defaults to ``2h`` and is
    only recorded.
    """
    pool = as_points(pool, "pool")
    a = as_points(interior_probes, "interior_probes", allow_empty=True)
    b = as_points(border_probes, "border_probes", allow_empty=True)
    if interior is not None and len(a):
        a = a[np.asarray(interior(a), dtype=bool)]
    if border is not None and len(b):
        b = b[np.asarray(border(b), dtype=bool)]
    if len(a) == 0 or len(b) == 0:
        raise EmptyRegion("empty probe set")
    min_a = int(ball_counts(pool, a, h).min())
    max_b = int(ball_counts(pool, b, h).max())
    margin = min_a - max_b
    return ValleyReport(
        holds=margin >= 0,
        margin=margin,
        min_interior_count=min_a,
        max_border_count=max_b,
        h=float(h),
        delta=float(2 * h if delta is None else delta),
    )


@dataclass
class SeedReport:
    ok: bool
    violations: list = field(default_factory=list)
    missing_classes: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)


def seed_check(sample, oracle) -> SeedReport:
    """Every seed label must agree with ``oracle`` and both classes must have
    a correctly labeled seed. ``violations`` lists offending seed indices."""
    seed = sample.seed
    if len(seed) == 0:
        return SeedReport(ok=False, missing_classes=[0, 1])
    truth = np.asarray(oracle(seed.points)).reshape(-1)
    bad = np.flatnonzero(truth != seed.labels).tolist()
    good = seed.labels[truth == seed.labels]
    missing = [c for c in (0, 1) if not np.any(good == c)]
    return SeedReport(ok=not bad and not missing, violations=bad, missing_classes=missing)


@dataclass
class BoundaryReport:
    first_bad_index: int | None
    first_bad_step: int | None = None
    assigned_label: int | None = None
    in_boundary: bool | None = None
    distance_to_other_class: float | None = None
    h: float = 0.0

    def to_dict(self):
        return asdict(self)

    @property
    def ok(self):
        return self.first_bad_index is None or bool(self.in_boundary)


def boundary_audit(trace, sample, oracle, h, bounds=None, probe_step=None) -> BoundaryReport:
    """Locate the first event whose label disagrees with ``oracle`` and test
    whether that point lies within ``h`` of the region the oracle assigns to
    the label it received, i.e. whether the mistake was made in the border
    collar of its own class.

    Evidence for the other region is the union of all seed and pool points
    the oracle puts there and a dense local grid (``probe_step``, default
    ``h/50``) over the ball, clipped to ``bounds`` when given.
    """
    pool = sample.pool
    events = [e for e in trace.events if e.step is not None]
    if not events:
        return BoundaryReport(first_bad_index=None, h=float(h))
    idx = np.array([e.pool_index for e in events])
    assigned = np.array([e.label for e in events])
    truth = np.asarray(oracle(pool[idx])).reshape(-1)
    bad = np.flatnonzero(truth != assigned)
    if len(bad) == 0:
        return BoundaryReport(first_bad_index=None, h=float(h))
    e = events[int(bad[0])]
    x = pool[e.pool_index]

    step = h / 50 if probe_step is None else probe_step
    local = probe_grid((x - h, x + h), step)
    if bounds is not None:
        lo, hi = np.broadcast_arrays(np.asarray(bounds[0], float), np.asarray(bounds[1], float))
        local = local[np.all((local >= lo) & (local <= hi), axis=1)]
    known = np.concatenate([sample.seed.points, pool])
    cand = np.concatenate([known, local]) if len(local) else known
    other = cand[np.asarray(oracle(cand)).reshape(-1) == e.label]
    if len(other) == 0:
        dist = float("inf")
    else:
        dist = float(nearest(x[None, :], other)[0][0])
    return BoundaryReport(
        first_bad_index=int(e.pool_index),
        first_bad_step=int(e.step),
        assigned_label=int(e.label),
        in_boundary=dist < h,
        distance_to_other_class=dist,
        h=float(h),
    )


# -- regions of the simulated models -------------------------------------------

def support_test(gen):
    """Vectorised membership test for the support of a generator's model."""
    if gen.kind == "sine":
        return lambda P: np.all(np.abs(np.atleast_2d(P)) <= 1.0, axis=1)
    p = gen.params

    def inside(P):
        P = np.atleast_2d(P)
        return np.any(
            [np.sqrt(np.sum((P - p.mean(c)) ** 2, axis=1)) < p.trunc_radius for c in (0, 1)], axis=0
        )

    return inside


@dataclass
class Regions:
    """Rasterised class regions of a model.

    ``interior[c]``: probes of class ``c`` farther than ``delta`` from every
    point outside the class region (the delta-interior). ``border[c]``:
    probes of class ``c`` closer than ``h`` to the other class.
    """

    probes: np.ndarray
    labels: np.ndarray  # -1 outside the support
    interior: dict
    border: dict
    step: float
    h: float
    delta: float


def model_regions(gen, h, delta=None, step=None) -> Regions:
    from scipy import ndimage

    delta = 2 * h if delta is None else delta
    step = h / 4 if step is None else step
    a, b = gen.bounds()
    probes = probe_grid((np.full(2, a), np.full(2, b)), step)
    n_axis = int(round(np.sqrt(len(probes))))
    labels = np.where(support_test(gen)(probes), gen.oracle(probes), -1)
    grid = np.pad(labels.reshape(n_axis, n_axis), 1, constant_values=-1)
    interior, border = {}, {}
    for c in (0, 1):
        to_outside = ndimage.distance_transform_edt(grid == c)[1:-1, 1:-1].ravel() * step
        to_other = ndimage.distance_transform_edt(grid != 1 - c)[1:-1, 1:-1].ravel() * step
        interior[c] = probes[(labels == c) & (to_outside > delta)]
        border[c] = probes[(labels == c) & (to_other < h)]
    return Regions(probes, labels, interior, border, step, h, delta)


def instance_report(gen, sample, cfg, probe_step=None) -> dict:
    """All checks on one simulated instance, as a JSON-ready dict."""
    from .harness import error_rate
    from .selftrain import run

    h = cfg.h
    step = h / 4 if probe_step is None else probe_step
    regions = model_regions(gen, h, step=step)
    inside = support_test(gen)
    truth = gen.oracle(sample.pool)
    covering = {}
    for c in (0, 1):
        members = sample.pool[truth == c]
        if len(members) == 0:
            covering[str(c)] = {"holds": False, "worst_gap": None}
            continue
        rep = covering_check(
            members,
            lambda P, c=c: (gen.oracle(P) == c) & inside(P),
            h,
            step,
            (np.full(2, gen.bounds()[0]), np.full(2, gen.bounds()[1])),
        )
        covering[str(c)] = rep.to_dict()
    valley = valley_check(
        sample.pool,
        np.concatenate([regions.interior[0], regions.interior[1]]),
        np.concatenate([regions.border[0], regions.border[1]]),
        h,
        delta=regions.delta,
    )
    trace = run(sample, cfg)
    audit = boundary_audit(trace, sample, gen.oracle, h)
    return {
        "h": h,
        "delta": regions.delta,
        "seed_check": seed_check(sample, gen.oracle).to_dict(),
        "covering": covering,
        "valley": valley.to_dict(),
        "boundary_audit": audit.to_dict(),
        "error_rate": error_rate(trace, sample.hidden_labels),
    }
