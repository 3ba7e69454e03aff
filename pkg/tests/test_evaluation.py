import numpy as np
import pytest

from gotcha.config import TrainConfig
from gotcha.errors import ConfigError
from gotcha.evaluation import (
    baseline_bounds,
    compare_modes,
    eval_rounds,
    ranking_percentile,
)
from gotcha.gallery import gen_synthetic, split
from gotcha.model import init_parameters
from gotcha.retrieval import all_distances
from gotcha.training import dims_for

from conftest import make_gallery


def brute_force_percentile(query, features, target_index):
    """Oracle: explicit pessimistic rank from a full sorted distance list."""
    d = all_distances(features, query)
    n = len(d)
    rank = 1 + sum(
        1 for i in range(n) if i != target_index and d[i] <= d[target_index]
    )
    return 100.0 * (n - rank) / (n - 1)


def test_unique_nearest_scores_100():
    feats = np.array([[0.0, 0.0], [5.0, 5.0], [9.0, 9.0]], dtype=np.float32)
    assert ranking_percentile(np.zeros(2), feats, 0) == 100.0


def test_farthest_scores_0():
    feats = np.array([[0.0, 0.0], [5.0, 5.0], [9.0, 9.0]], dtype=np.float32)
    assert ranking_percentile(np.zeros(2), feats, 2) == 0.0


def test_matches_oracle_on_random_instances():
    rng = np.random.default_rng(0)
    for _ in range(100):
        n = int(rng.integers(2, 300))
        f = int(rng.integers(1, 8))
        feats = rng.standard_normal((n, f)).astype(np.float32)
        q = rng.standard_normal(f)
        t = int(rng.integers(0, n))
        assert ranking_percentile(q, feats, t) == pytest.approx(
            brute_force_percentile(q, feats, t)
        )


def test_pessimistic_ties():
    # three records at identical distance: the target ranks below both twins
    feats = np.array([[1.0, 0.0], [1.0, 0.0], [1.0, 0.0], [9.0, 9.0]], dtype=np.float32)
    assert ranking_percentile(np.zeros(2), feats, 0) == pytest.approx(100 * 1 / 3)


def test_percentile_requires_two_records():
    with pytest.raises(ConfigError):
        ranking_percentile(np.zeros(1), np.zeros((1, 1), dtype=np.float32), 0)


def test_permutation_invariance_up_to_ties():
    rng = np.random.default_rng(1)
    feats = rng.standard_normal((50, 4)).astype(np.float32)
    q = rng.standard_normal(4)
    perm = rng.permutation(50)
    p_original = ranking_percentile(q, feats, 17)
    p_shuffled = ranking_percentile(q, feats[perm], int(np.flatnonzero(perm == 17)[0]))
    assert p_original == pytest.approx(p_shuffled)


def test_untrained_round_one_percentile_is_uniformish():
    g = gen_synthetic(300, 12, 16, noise=0.05, seed=3)
    cfg = TrainConfig(seed=0, epochs=1)
    params = init_parameters(dims_for(g, cfg), 0)
    report = eval_rounds(params, g, cfg, episodes=400, seed=5)
    assert abs(report.percentile_by_round[0] - 50.0) < 7.0


def test_eval_report_shape(small_gallery):
    cfg = TrainConfig(epochs=1)
    params = init_parameters(dims_for(small_gallery, cfg), 1)
    report = eval_rounds(params, small_gallery, cfg, episodes=30, seed=2)
    assert len(report.percentile_by_round) == cfg.rounds
    assert len(report.loss_by_round) == cfg.rounds
    assert report.episodes == 30
    assert all(0.0 <= v <= 100.0 for v in report.percentile_by_round)
    d = report.to_dict()
    assert d["mode"] == "progressive"
    assert d["config"]["margin"] == 2.0


def test_eval_deterministic(small_gallery):
    cfg = TrainConfig(epochs=1)
    params = init_parameters(dims_for(small_gallery, cfg), 1)
    a = eval_rounds(params, small_gallery, cfg, episodes=25, seed=9)
    b = eval_rounds(params, small_gallery, cfg, episodes=25, seed=9)
    assert a.percentile_by_round == b.percentile_by_round
    assert a.loss_by_round == b.loss_by_round


def test_baseline_unique_signature_collapses_bounds():
    attrs = np.array(
        [[1, 1, 1, 1], [1, 1, 1, -1], [1, 1, -1, -1], [1, -1, -1, -1]], dtype=np.int8
    )
    g = make_gallery(["a", "b", "c", "d"], attrs, np.zeros((4, 2)))
    upper, lower, expectation = baseline_bounds(g, 0)
    assert upper == lower == expectation == 100.0


def test_baseline_hand_enumerated_tie_case():
    # N=5: the target and exactly one twin share the top match count
    attrs = np.array(
        [
            [1, 1, 1, 1],
            [1, 1, 1, 1],
            [1, 1, -1, -1],
            [1, -1, -1, -1],
            [-1, -1, -1, -1],
        ],
        dtype=np.int8,
    )
    g = make_gallery(list("abcde"), attrs, np.zeros((5, 2)))
    upper, lower, expectation = baseline_bounds(g, 0)
    assert upper == 100.0
    assert lower == 75.0
    assert expectation == 87.5


def test_baseline_bound_ordering_random():
    rng = np.random.default_rng(4)
    for trial in range(30):
        n = int(rng.integers(2, 80))
        a = int(rng.integers(1, 10))
        g = make_gallery(
            [f"r{i}" for i in range(n)],
            rng.choice([-1, 1], size=(n, a)),
            np.zeros((n, 1)),
        )
        t = int(rng.integers(0, n))
        flip = float(rng.choice([0.0, 0.2, 0.5]))
        upper, lower, expectation = baseline_bounds(g, t, flip, seed=trial)
        assert upper >= expectation >= lower


def test_baseline_oracle_expectation_100_for_unique_signatures():
    g = gen_synthetic(64, 12, 4, noise=0.0, seed=6)
    signatures = {tuple(row) for row in g.attributes.tolist()}
    assert len(signatures) == len(g)  # unique with overwhelming probability
    for t in range(0, 64, 7):
        _, _, expectation = baseline_bounds(g, t, flip_prob=0.0)
        assert expectation == 100.0


def test_baseline_flip_prob_validated(small_gallery):
    with pytest.raises(ConfigError):
        baseline_bounds(small_gallery, 0, flip_prob=1.5)


def test_compare_modes_table_and_determinism():
    g = gen_synthetic(80, 10, 8, noise=0.05, seed=8)
    train_view, test_view = split(g, 0.75)
    cfg = TrainConfig(rounds=3, epochs=1, episodes_per_epoch=12, batch_size=6)
    table1 = compare_modes(train_view, test_view, cfg, seeds=[1, 2], eval_episodes=10)
    table2 = compare_modes(train_view, test_view, cfg, seeds=[1, 2], eval_episodes=10)
    assert set(table1) == {"progressive", "full", "full-no-attr"}
    for mode, row in table1.items():
        assert len(row["percentile_mean"]) == 3
        assert len(row["percentile_std"]) == 3
        assert row == table2[mode]


def test_compare_modes_needs_two_seeds(small_gallery):
    train_view, test_view = split(small_gallery, 0.5)
    with pytest.raises(ConfigError):
        compare_modes(train_view, test_view, TrainConfig(epochs=1), seeds=[1])
