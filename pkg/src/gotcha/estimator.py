"""Scikit-learn style facade over the dialog retrieval model."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .config import TrainConfig
from .engine import run_episode
from .evaluation import EvalReport, eval_rounds, ranking_percentile
from .gallery import Gallery
from .seeding import EpisodeStreams
from .training import Checkpoint, train
from .witness import compute_relevance


class InteractiveFaceRetriever(BaseEstimator):
    """Interactive retrieval model with a fit/score interface.

    ``fit`` trains the dialog model on a Gallery (pass the train view);
    ``score`` returns the mean final-round ranking percentile of simulated
    greedy dialogs on another view, on a 0..100 scale. Hyperparameter names
    mirror the training configuration so the estimator composes with
    sklearn tooling (``get_params``, ``clone``, grid search).
    """

    def __init__(
        self,
        rounds: int = 5,
        margin: float = 2.0,
        lr: float = 0.001,
        k: int = 10,
        batch_size: int = 32,
        epochs: int = 10,
        episodes_per_epoch: int | None = None,
        mode: str = "progressive",
        schedule: tuple | None = None,
        hidden_dim: int | None = None,
        exclude_shown: bool = True,
        resample_mask: bool = False,
        seed: int = 0,
    ):
        self.rounds = rounds
        self.margin = margin
        self.lr = lr
        self.k = k
        self.batch_size = batch_size
        self.epochs = epochs
        self.episodes_per_epoch = episodes_per_epoch
        self.mode = mode
        self.schedule = schedule
        self.hidden_dim = hidden_dim
        self.exclude_shown = exclude_shown
        self.resample_mask = resample_mask
        self.seed = seed

    def _config(self) -> TrainConfig:
        return TrainConfig(
            rounds=self.rounds,
            margin=self.margin,
            lr=self.lr,
            k=self.k,
            batch_size=self.batch_size,
            epochs=self.epochs,
            episodes_per_epoch=self.episodes_per_epoch,
            seed=self.seed,
            mode=self.mode,
            schedule=self.schedule,
            hidden_dim=self.hidden_dim,
            exclude_shown=self.exclude_shown,
            resample_mask=self.resample_mask,
        )

    def fit(self, X: Gallery, y=None, eval_gallery: Gallery | None = None):
        """Train on a gallery view. ``eval_gallery`` adds per-epoch metrics."""
        cfg = self._config()
        eval_fn = None
        if eval_gallery is not None:
            def eval_fn(params, epoch):
                report = eval_rounds(
                    params, eval_gallery, cfg, episodes=min(200, len(eval_gallery)),
                    seed=cfg.seed, scope=("train-eval", epoch),
                )
                return report.percentile_by_round

        ckpt, metrics = train(X, cfg, eval_fn=eval_fn)
        self.checkpoint_ = ckpt
        self.history_ = metrics
        self.n_features_in_ = X.n_features
        return self

    def _checkpoint(self) -> Checkpoint:
        if not hasattr(self, "checkpoint_"):
            raise NotFittedError("this retriever has not been fitted")
        return self.checkpoint_

    @classmethod
    def from_checkpoint(cls, ckpt: Checkpoint) -> "InteractiveFaceRetriever":
        cfg = ckpt.config
        est = cls(**{k: getattr(cfg, k) for k in (
            "rounds", "margin", "lr", "k", "batch_size", "epochs",
            "episodes_per_epoch", "mode", "schedule", "hidden_dim",
            "exclude_shown", "resample_mask", "seed",
        )})
        est.checkpoint_ = ckpt
        est.history_ = []
        est.n_features_in_ = ckpt.dims.n_features
        return est

    def evaluate(self, X: Gallery, episodes: int = 200, seed: int = 0) -> EvalReport:
        ckpt = self._checkpoint()
        return eval_rounds(ckpt.params, X, ckpt.config, episodes, seed)

    def score(self, X: Gallery, y=None, episodes: int = 200, seed: int = 0) -> float:
        """Mean final-round percentile over simulated dialogs (0..100)."""
        report = self.evaluate(X, episodes=episodes, seed=seed)
        return float(report.percentile_by_round[-1])

    def run_episode(self, X: Gallery, target_id: str | None = None, seed: int = 0):
        """One greedy dialog; returns a per-round transcript list."""
        ckpt = self._checkpoint()
        target_index = X.index_of(target_id) if target_id is not None else None
        episode = run_episode(
            ckpt.params, X, ckpt.config, EpisodeStreams(seed),
            policy="greedy", target_index=target_index,
        )
        target = X.record(episode.target_index)
        transcript = []
        for r in episode.rounds:
            cand = X.record(r.candidate_index)
            matched_attrs = int(
                np.sum(compute_relevance(cand.attributes, target.attributes) > 0)
            )
            transcript.append(
                {
                    "round": r.round_index + 1,
                    "candidate_id": cand.id,
                    "matched_attributes": matched_attrs,
                    "percentile": ranking_percentile(
                        r.s, X.features, episode.target_index
                    ),
                    "matched": False,
                }
            )
        if episode.matched:
            cand_id = X.ids[episode.shown[-1]]
            transcript.append(
                {
                    "round": episode.matched_round + 1,
                    "candidate_id": cand_id,
                    "matched_attributes": X.n_attrs,
                    "percentile": 100.0,
                    "matched": True,
                }
            )
        return {
            "target_id": target.id,
            "matched": episode.matched,
            "shown_ids": [X.ids[i] for i in episode.shown],
            "rounds": transcript,
        }
