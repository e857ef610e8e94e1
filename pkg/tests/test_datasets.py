
import numpy as np
import pytest

import oracles
from semisup.datasets import (
    CASE1,
    CASE2,
    GeneratorSpec,
    LabeledSet,
    SplitSample,
    bayes_error,
    bayes_sine,
    bayes_truncgauss,
    child_seed,
    gen_sine,
    gen_truncgauss,
    load_csv,
    prune_by_nn,
    sample_sine,
    sine_sup_distance,
    sine_within,
    write_index_map,
    write_sample,
)
from semisup.errors import DegenerateParameters, InvalidInput, ParseError


def test_sine_far_points():
    assert bayes_sine([0.0, 0.9]) == 1
    assert bayes_sine([0.0, -0.9]) == 0
    assert not sine_within([[0.0, 0.9], [0.0, -0.9]], 0.2).any()
    assert bayes_sine([0.0, 0.5]) == 1 and bayes_sine([0.0, -0.5]) == 0


def test_bayes_sine_dimension():
    with pytest.raises(InvalidInput):
        bayes_sine([0.0, 0.0, 0.0])


def test_sup_distance_matches_discretised_curve(rng):
    pts = rng.uniform(-1, 1, (300, 2))
    t = np.linspace(-1, 1, 200_001)
    curve = np.c_[t, 0.5 * np.sin(4 * t)]
    brute = np.array([np.min(np.max(np.abs(curve - p), axis=1)) for p in pts])
    assert np.max(np.abs(sine_sup_distance(pts) - brute)) < 1e-5


def test_sine_band_mass():
    X, y = sample_sine(100_000, np.random.default_rng(0))
    assert np.mean(sine_within(X, 0.2)) == pytest.approx(1 / 8, abs=0.01)


def test_sine_uniform_on_each_region():
    # Within S1, a uniform draw puts mass proportional to area: compare the
    # share of S1 draws in the left half with the left half's share of S1 area.
    X, _ = sample_sine(100_000, np.random.default_rng(1))
    far = X[~sine_within(X, 0.2)]
    grid = np.random.default_rng(2).uniform(-1, 1, (200_000, 2))
    gfar = grid[~sine_within(grid, 0.2)]
    assert np.mean(far[:, 0] < 0) == pytest.approx(np.mean(gfar[:, 0] < 0), abs=0.01)
    assert np.mean(far[:, 1] > 0.5) == pytest.approx(np.mean(gfar[:, 1] > 0.5), abs=0.01)


def test_sine_labels_follow_oracle():
    s = gen_sine(1000, 20, 7)
    assert np.array_equal(bayes_sine(s.pool), s.hidden_labels)
    assert np.array_equal(bayes_sine(s.seed.points), s.seed.labels)
    assert 0 < s.seed.labels.sum() < 20


def test_sine_per_class_seed():
    s = gen_sine(100, rng_seed=1, per_class=(5, 5))
    assert sorted(s.seed.labels.tolist()) == [0] * 5 + [1] * 5


def test_generators_deterministic(tmp_path):
    for gen in (GeneratorSpec("sine", 500, 20), GeneratorSpec("truncgauss", 500, None, case=2)):
        a = write_sample(tmp_path / "a", gen.draw(99))
        b = write_sample(tmp_path / "b", gen.draw(99))
        for key in a:
            assert open(a[key], "rb").read() == open(b[key], "rb").read()
        c = write_sample(tmp_path / "c", gen.draw(100))
        assert open(a["pool"], "rb").read() != open(c["pool"], "rb").read()


def test_child_seed_stable():
    assert child_seed(0, 0) == child_seed(0, 0)
    assert len({child_seed(0, r) for r in range(100)}) == 100
    assert 0 <= child_seed(2**63, 5) < 2**64


def test_truncgauss_truncation_and_balance():
    s = gen_truncgauss(10_000, rng_seed=5)
    for y in (0, 1):
        mu = CASE1.mean(y)
        assert np.all(np.linalg.norm(s.pool[s.hidden_labels == y] - mu, axis=1) < 1.5)
    assert s.hidden_labels.mean() == pytest.approx(0.5, abs=0.02)
    assert s.seed.labels.tolist() == [1, 0]
    assert s.seed.points.tolist() == [[0.0, 0.0], [1.5, 1.5]]


def test_truncgauss_class_means():
    s = gen_truncgauss(20_000, mu0=(1.2, 1.2), rng_seed=8)
    for y in (0, 1):
        pts = s.pool[s.hidden_labels == y]
        band = 3 * 0.6 / np.sqrt(len(pts))  # truncation only shrinks the spread
        assert np.all(np.abs(pts.mean(axis=0) - CASE2.mean(y)) < band)


def test_truncgauss_random_seed_set():
    s = gen_truncgauss(200, rng_seed=1, n=6)
    assert len(s.seed) == 6 and 0 < s.seed.labels.sum() < 6


def test_truncgauss_degenerate():
    with pytest.raises(DegenerateParameters):
        gen_truncgauss(10, sigma_diag=(10.0, 10.0), trunc_radius=0.3)


def test_bayes_truncgauss_rule():
    assert bayes_truncgauss([0.0, 0.0]) == 1
    assert bayes_truncgauss([1.5, 1.5]) == 0
    assert bayes_truncgauss([0.75, 0.75]) == 1  # bisector tie goes to 1
    assert bayes_truncgauss([-1.0, 0.0]) == 1  # only inside the label-1 ball
    assert bayes_truncgauss([2.8, 1.5]) == 0
    assert bayes_truncgauss([5.0, 5.0]) == 0  # outside both: nearer mean


def test_bayes_error_sine_is_zero():
    gen = GeneratorSpec("sine", 10)
    assert bayes_error(gen.oracle, gen.sampler, 20_000, 1) == 0.0


@pytest.mark.parametrize("case,expected", [(1, 0.025), (2, 0.067)])
def test_bayes_error_truncgauss(case, expected):
    gen = GeneratorSpec("truncgauss", 10, None, case=case)
    assert bayes_error(gen.oracle, gen.sampler, 200_000, 11) == pytest.approx(expected, abs=0.005)


def _write(path, text):
    path.write_text(text)
    return str(path)


def test_load_csv_roundtrip(tmp_path):
    s = gen_sine(50, 4, 3)
    paths = write_sample(tmp_path, s)
    back = load_csv(paths["seed"], paths["pool_labeled"], pool_labels=True)
    assert np.array_equal(back.pool, s.pool)
    assert np.array_equal(back.hidden_labels, s.hidden_labels)
    assert np.array_equal(back.seed.points, s.seed.points)
    assert load_csv(paths["seed"], paths["pool"]).hidden_labels is None


def test_load_csv_header(tmp_path):
    seed = _write(tmp_path / "s.csv", "x,y,label\n0,0,1\n1,1,0\n")
    pool = _write(tmp_path / "p.csv", "x,y\n0.5,0.5\n")
    s = load_csv(seed, pool, header=True)
    assert s.pool.tolist() == [[0.5, 0.5]]


@pytest.mark.parametrize(
    "seed_text,pool_text,row",
    [
        ("0,0,1\n1,1,0\n", "0.5,0.5\n0.1\n", 2),
        ("0,0,1\n1,1,0\n", "0.5,abc\n", 1),
        ("0,0,1\n1,1,2\n", "0.5,0.5\n", 2),
    ],
)
def test_load_csv_errors(tmp_path, seed_text, pool_text, row):
    seed = _write(tmp_path / "s.csv", seed_text)
    pool = _write(tmp_path / "p.csv", pool_text)
    with pytest.raises(ParseError) as err:
        load_csv(seed, pool)
    assert err.value.row == row


def test_load_csv_empty_pool(tmp_path):
    seed = _write(tmp_path / "s.csv", "0,0,1\n")
    pool = _write(tmp_path / "p.csv", "")
    with pytest.raises(InvalidInput):
        load_csv(seed, pool)


def test_prune_trivial():
    _, kept = prune_by_nn([[0.0, 0.0], [1.0, 0.0]], 2.0)
    assert kept.tolist() == [0, 1]
    _, kept = prune_by_nn([[0.0, 0.0], [1.0, 0.0]], 0.5)
    assert kept.tolist() == []
    _, kept = prune_by_nn([[0.0, 0.0], [1.0, 0.0]], 1.0)  # strict
    assert kept.tolist() == []


def test_prune_matches_pairwise_scan(rng):
    pts = rng.random((300, 2))
    pruned, kept = prune_by_nn(pts, 0.03)
    assert kept.tolist() == oracles.prune(pts, 0.03)
    assert np.array_equal(pruned, pts[kept])


def test_prune_high_dimension(rng):
    pts = rng.normal(size=(120, 40))
    _, kept = prune_by_nn(pts, 8.0)
    assert kept.tolist() == oracles.prune(pts, 8.0)


def test_prune_single_pass_is_deterministic(rng):
    pts = rng.random((200, 2))
    a = prune_by_nn(pts, 0.04)[1]
    b = prune_by_nn(pts.copy(), 0.04)[1]
    assert np.array_equal(a, b)


def test_index_map_csv(tmp_path):
    write_index_map(tmp_path / "m.csv", np.array([2, 5, 9]))
    assert (tmp_path / "m.csv").read_text() == "original_index,new_index\n2,0\n5,1\n9,2\n"


def test_containers_validate():
    with pytest.raises(InvalidInput):
        LabeledSet([[0.0, 0.0]], [2])
    with pytest.raises(InvalidInput):
        SplitSample(LabeledSet([[0.0, 0.0]], [1]), [[0.0, 0.0, 0.0]])
    with pytest.raises(InvalidInput):
        SplitSample(LabeledSet([[0.0, 0.0]], [1]), [[0.0, 0.0]], [0, 1])
