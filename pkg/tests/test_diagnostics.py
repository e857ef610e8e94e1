import json

import numpy as np
import pytest

from semisup.datasets import CANONICAL_SEED, GeneratorSpec, LabeledSet, SplitSample, bayes_truncgauss, child_seed
from semisup.diagnostics import (
    ball_counts,
    boundary_audit,
    covering_check,
    instance_report,
    model_regions,
    probe_grid,
    seed_check,
    valley_check,
)
from semisup.errors import EmptyRegion, InvalidInput
from semisup.selftrain import RunConfig, run_sequential

UNIT = ((0.0, 0.0), (1.0, 1.0))


def everywhere(P):
    return np.ones(len(P), dtype=bool)


def right_half(P):
    return (np.atleast_2d(P)[:, 0] >= 0).astype(np.int64)


def test_probe_grid_shape():
    g = probe_grid(UNIT, 0.25)
    assert g.shape == (25, 2)
    assert g.min() == 0.0 and g.max() == 1.0


def test_covering_members_are_probes():
    probes = probe_grid(UNIT, 0.05)
    rep = covering_check(probes, everywhere, 0.2, 0.05, UNIT)
    assert rep.holds and rep.worst_gap == 0.0


def test_covering_single_member_fails():
    rep = covering_check([[0.0, 0.0]], everywhere, 0.1, 0.025, ((0.0, 0.0), (10.0, 10.0)))
    assert not rep.holds


def test_covering_uniform_sample():
    pts = np.random.default_rng(0).random((10_000, 2))
    rep = covering_check(pts, everywhere, 0.2, 0.01, UNIT)
    assert rep.holds and rep.worst_gap < 0.1
    assert rep.worst_gap < 0.04  # of order (log l / l)^(1/2)


def test_covering_monotone_in_h():
    pts = np.random.default_rng(1).random((200, 2))
    results = [covering_check(pts, everywhere, h, 0.01, UNIT).holds for h in np.linspace(0.04, 0.4, 19)]
    first = results.index(True)
    assert all(results[first:])


def test_covering_errors():
    with pytest.raises(EmptyRegion):
        covering_check([[0.0, 0.0]], lambda P: np.zeros(len(P), bool), 0.4, 0.1, UNIT)
    with pytest.raises(InvalidInput):
        covering_check([[0.0, 0.0]], everywhere, 0.4, 0.2, UNIT)


def test_valley_far_border():
    pool = np.random.default_rng(2).random((300, 2))
    a = probe_grid(((0.2, 0.2), (0.8, 0.8)), 0.1)
    b = [[10.0, 10.0], [12.0, 12.0]]
    rep = valley_check(pool, a, b, 0.15)
    assert rep.holds and rep.max_border_count == 0
    assert rep.margin == ball_counts(pool, a, 0.15).min()


def test_valley_congruent_regions():
    # One probe per region: the margin is a difference of two exchangeable
    # counts, so it centers on zero and holds about half the time.
    holds, margins = 0, []
    for seed in range(60):
        pool = np.random.default_rng(seed).random((2000, 2))
        rep = valley_check(pool, [[0.3, 0.3]], [[0.7, 0.7]], 0.1)
        holds += rep.holds
        margins.append(rep.margin)
    assert abs(np.mean(margins)) < 3 * np.std(margins) / np.sqrt(len(margins))
    assert 18 <= holds <= 48


def test_valley_antisymmetric():
    pool = np.random.default_rng(3).random((500, 2))
    a = np.random.default_rng(4).random((20, 2))
    b = np.random.default_rng(5).random((30, 2))
    ab = valley_check(pool, a, b, 0.1)
    ba = valley_check(pool, b, a, 0.1)
    ca, cb = ball_counts(pool, a, 0.1), ball_counts(pool, b, 0.1)
    assert ab.margin == ca.min() - cb.max() and ba.margin == cb.min() - ca.max()
    # Exactly antisymmetric for single-probe sets.
    assert valley_check(pool, a[:1], b[:1], 0.1).margin == -valley_check(pool, b[:1], a[:1], 0.1).margin


def test_valley_empty():
    with pytest.raises(EmptyRegion):
        valley_check([[0.0, 0.0]], np.empty((0, 2)), [[0.0, 0.0]], 0.1)


@pytest.mark.xfail(strict=True, reason="valley holds on 43 of 50 draws at this sample size, short of 45")
def test_valley_sine_replications():
    gen = GeneratorSpec("sine", 2400, 20)
    regions = model_regions(gen, 0.15)
    a = np.concatenate([regions.interior[0], regions.interior[1]])
    b = np.concatenate([regions.border[0], regions.border[1]])
    holds = sum(valley_check(gen.draw(child_seed(0, r)).pool, a, b, 0.15).holds for r in range(50))
    assert holds >= 45


def test_valley_sine_mostly_holds():
    gen = GeneratorSpec("sine", 2400, 20)
    regions = model_regions(gen, 0.15)
    a = np.concatenate([regions.interior[0], regions.interior[1]])
    b = np.concatenate([regions.border[0], regions.border[1]])
    holds = sum(valley_check(gen.draw(child_seed(0, r)).pool, a, b, 0.15).holds for r in range(20))
    assert holds >= 14


def test_model_regions_geometry():
    gen = GeneratorSpec("sine", 10)
    r = model_regions(gen, 0.15)
    for c in (0, 1):
        assert np.all(gen.oracle(r.interior[c]) == c)
        assert np.all(np.abs(r.interior[c]) < 1 - 0.3 + 1e-9)
        assert np.all(gen.oracle(r.border[c]) == c)
    assert r.delta == pytest.approx(0.3)


def _canonical(labels=None):
    pts, labs = zip(*CANONICAL_SEED)
    labs = labs if labels is None else labels
    return SplitSample(LabeledSet(pts, labs), [[0.5, 0.5]])


def test_seed_check_canonical():
    rep = seed_check(_canonical(), bayes_truncgauss)
    assert rep.ok and rep.violations == [] and rep.missing_classes == []


def test_seed_check_flipped():
    rep = seed_check(_canonical([0, 0]), bayes_truncgauss)
    assert not rep.ok and rep.violations == [0]


def test_seed_check_missing_class():
    rep = seed_check(SplitSample(LabeledSet([[0, 0], [0.1, 0.1]], [1, 1]), [[0.5, 0.5]]), bayes_truncgauss)
    assert rep.missing_classes == [0] and rep.violations == [] and not rep.ok


def test_audit_no_bad_point():
    s = SplitSample(LabeledSet([[-1.0, 0.0], [1.0, 0.0]], [0, 1]), [[-0.8, 0.0], [0.8, 0.0]], [0, 1])
    t = run_sequential(s, RunConfig(0.5))
    rep = boundary_audit(t, s, right_half, 0.5)
    assert rep.first_bad_index is None and rep.ok


def test_audit_early_border_mistake():
    # The only candidate sits just right of the boundary but sees a single
    # class-0 seed, so it is labeled 0 at step 1.
    s = SplitSample(LabeledSet([[-0.2, 0.0], [2.0, 0.0]], [0, 1]), [[0.05, 0.0]], [1])
    t = run_sequential(s, RunConfig(0.3))
    rep = boundary_audit(t, s, right_half, 0.3)
    assert rep.first_bad_index == 0 and rep.first_bad_step == 1 and rep.assigned_label == 0
    assert rep.in_boundary and rep.distance_to_other_class == pytest.approx(0.05, abs=0.3 / 50)


def test_audit_flags_mistake_far_from_border():
    # A mislabeled seed deep inside class 1 propagates its label: not a
    # boundary mistake.
    s = SplitSample(LabeledSet([[2.0, 0.0], [-2.0, 0.0]], [0, 0]), [[2.1, 0.0]], [1])
    t = run_sequential(s, RunConfig(0.3))
    rep = boundary_audit(t, s, right_half, 0.3)
    assert rep.first_bad_index == 0 and not rep.in_boundary and not rep.ok


def test_audit_sine_replications():
    gen = GeneratorSpec("sine", 2400, 20)
    for r in range(5):
        s = gen.draw(child_seed(3, r))
        t = run_sequential(s, RunConfig(0.15))
        assert boundary_audit(t, s, gen.oracle, 0.15, bounds=(-1.0, 1.0)).ok


def test_instance_report_json():
    gen = GeneratorSpec("sine", 600, 20)
    rep = instance_report(gen, gen.draw(1), RunConfig(0.15))
    text = json.dumps(rep)
    for key in ("holds", "worst_gap", "margin", "violations", "first_bad_index", "in_boundary"):
        assert f'"{key}"' in text
