"""Evaluation: ranking percentile, per-round curves, baseline bounds, mode study.

The headline metric is the target's ranking percentile under L2 distance to
the round's query vector: 100 * (N - rank) / (N - 1), with a pessimistic tie
rule (every record at the target's exact distance ranks above it, so ties can
never flatter the number).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import TrainConfig
from .engine import draw_negative, run_episode
from .errors import ConfigError
from .gallery import Gallery
from .model import ModelParameters
from .retrieval import all_distances
from .seeding import EpisodeStreams, stream
from .training import hinge_loss, train
from .validation import as_attribute_vector


def ranking_percentile(query, features: np.ndarray, target_index: int) -> float:
    """Percentile of the target record among all records, pessimistic ties."""
    n = features.shape[0]
    if n < 2:
        raise ConfigError("ranking percentile is undefined for fewer than 2 records")
    if not 0 <= target_index < n:
        raise IndexError(f"target index {target_index} outside 0..{n - 1}")
    d = all_distances(features, query)
    d_target = d[target_index]
    closer = int(np.sum(d < d_target))
    tied = int(np.sum(d == d_target)) - 1
    rank = 1 + closer + tied
    return 100.0 * (n - rank) / (n - 1)


@dataclass
class EvalReport:
    """Per-round means over a batch of simulated greedy dialogs."""

    percentile_by_round: list
    loss_by_round: list
    episodes: int
    matches: int
    mode: str
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "percentile_by_round": self.percentile_by_round,
            "loss_by_round": self.loss_by_round,
            "episodes": self.episodes,
            "matches": self.matches,
            "mode": self.mode,
            "config": self.config,
        }


def eval_rounds(
    params: ModelParameters,
    gallery: Gallery,
    cfg: TrainConfig,
    episodes: int,
    seed: int,
    scope: tuple = (),
) -> EvalReport:
    """Run greedy dialogs with the simulated witness and average per round.

    Percentile is recorded after each round's query vector. Once the witness
    confirms a match the target is retrieved: later rounds carry percentile
    100 forward. The loss column averages the rounds that actually ran.
    """
    if len(gallery) < 2:
        raise ConfigError("evaluation needs at least 2 records")
    if episodes < 1:
        raise ConfigError("episodes must be >= 1")
    t_max = cfg.rounds
    pct_sum = np.zeros(t_max)
    pct_count = np.zeros(t_max, dtype=np.int64)
    loss_sum = np.zeros(t_max)
    loss_count = np.zeros(t_max, dtype=np.int64)
    matches = 0
    for i in range(episodes):
        streams = EpisodeStreams(seed, i, scope=scope)
        ep = run_episode(
            params, gallery, cfg, streams, policy="greedy", with_negatives=True
        )
        x_pos = gallery.features[ep.target_index].astype(np.float64)
        for r in ep.rounds:
            pct_sum[r.round_index] += ranking_percentile(
                r.s, gallery.features, ep.target_index
            )
            pct_count[r.round_index] += 1
            x_neg = gallery.features[r.negative_index].astype(np.float64)
            loss_sum[r.round_index] += hinge_loss(r.s, x_pos, x_neg, cfg.margin)
            loss_count[r.round_index] += 1
        if ep.matched:
            matches += 1
            for t in range(ep.matched_round, t_max):
                pct_sum[t] += 100.0
                pct_count[t] += 1
    with np.errstate(invalid="ignore"):
        pct = np.where(pct_count > 0, pct_sum / np.maximum(pct_count, 1), np.nan)
        loss = np.where(loss_count > 0, loss_sum / np.maximum(loss_count, 1), np.nan)
    return EvalReport(
        percentile_by_round=[float(v) for v in pct],
        loss_by_round=[float(v) for v in loss],
        episodes=episodes,
        matches=matches,
        mode=cfg.mode,
        config=cfg.to_dict(),
    )


def baseline_bounds(
    gallery: Gallery, target_index: int, flip_prob: float = 0.0, seed: int = 0
):
    """Attribute-matching baseline: (upper, lower, expectation) percentiles.

    Every record is scored by how many attributes agree with the target's
    signature (optionally corrupted by independent sign flips, standing in
    for attribute-classifier error). Records sharing the top-scoring block
    with the target give the head and tail ranks of its tie block; the
    expectation is the mean of the two bounds.
    """
    n = len(gallery)
    if n < 2:
        raise ConfigError("baseline bounds are undefined for fewer than 2 records")
    if not 0.0 <= flip_prob <= 1.0:
        raise ConfigError("flip_prob must be in [0, 1]")
    signature = as_attribute_vector(gallery.attributes[target_index]).copy()
    if flip_prob > 0.0:
        flips = stream(seed, "baseline-flips", target_index).random(len(signature))
        signature[flips < flip_prob] *= -1
    counts = (gallery.attributes == signature).sum(axis=1)
    target_count = counts[target_index]
    better = int(np.sum(counts > target_count))
    tied = int(np.sum(counts == target_count))  # includes the target
    head = 1 + better
    tail = better + tied
    upper = 100.0 * (n - head) / (n - 1)
    lower = 100.0 * (n - tail) / (n - 1)
    return upper, lower, (upper + lower) / 2.0


def compare_modes(
    train_view: Gallery,
    test_view: Gallery,
    cfg: TrainConfig,
    seeds,
    eval_episodes: int = 200,
) -> dict:
    """Train and evaluate every disclosure mode under matched seeds.

    Returns per-mode per-round percentile/loss means and across-seed
    standard deviations, in the shape of the disclosure-mode comparison.
    """
    seeds = list(seeds)
    if len(seeds) < 2:
        raise ConfigError("mode comparison needs at least 2 seeds")
    table = {}
    for mode in ("progressive", "full", "full-no-attr"):
        pct_rows, loss_rows = [], []
        for seed in seeds:
            run_cfg = TrainConfig.from_dict({**cfg.to_dict(), "mode": mode, "seed": seed})
            ckpt, _ = train(train_view, run_cfg)
            report = eval_rounds(
                ckpt.params, test_view, run_cfg, eval_episodes, seed, scope=("compare",)
            )
            pct_rows.append(report.percentile_by_round)
            loss_rows.append(report.loss_by_round)
        pct = np.asarray(pct_rows, dtype=np.float64)
        loss = np.asarray(loss_rows, dtype=np.float64)
        table[mode] = {
            "percentile_mean": [float(v) for v in pct.mean(axis=0)],
            "percentile_std": [float(v) for v in pct.std(axis=0)],
            "loss_mean": [float(v) for v in np.nanmean(loss, axis=0)],
            "loss_std": [float(v) for v in np.nanstd(loss, axis=0)],
            "seeds": seeds,
        }
    return table
