"""The dialog loop connecting witness, encoder, aggregator, and retrieval.

One episode: the witness picks a mental target, the system opens with a
uniform-random candidate, and each round the witness's (possibly masked)
relevance reply is encoded, folded into the recurrent state, and used to scan
the gallery for the next candidate. The loop stops on an exact match or after
the configured round count.

``system_step`` is the system's half of one round. The HTTP service drives it
directly with human feedback; ``run_episode`` closes the loop with the
simulated witness. Keeping both on the same code path is what makes the
over-the-wire candidate sequence bit-identical to the in-process one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import TrainConfig
from .errors import EmptyScanError
from .gallery import Gallery
from .model import DialogState, ModelParameters, aggregate, encode_round, fresh_state
from .retrieval import greedy_candidate, sample_candidate, scan_top_k, initial_candidate
from .seeding import EpisodeStreams
from .witness import MaskPlan, make_mask_plan, witness_round

_PLAN_SEED_BOUND = 2**63


@dataclass
class SystemStep:
    s: np.ndarray
    state: DialogState
    cache: object
    next_index: int | None


@dataclass
class RoundRecord:
    """One realized encoder round of an episode."""

    round_index: int
    candidate_index: int
    relevance: np.ndarray
    s: np.ndarray
    cache: object
    negative_index: int | None


@dataclass
class EpisodeResult:
    target_index: int
    shown: list = field(default_factory=list)
    rounds: list = field(default_factory=list)
    matched_round: int | None = None

    @property
    def matched(self) -> bool:
        return self.matched_round is not None


def derive_plan(cfg: TrainConfig, n_attrs: int, streams: EpisodeStreams) -> MaskPlan:
    plan_seed = int(streams.plan().integers(_PLAN_SEED_BOUND))
    return make_mask_plan(
        cfg.disclosure_schedule(),
        n_attrs,
        plan_seed,
        resample_per_round=cfg.resample_mask,
    )


def system_step(
    params: ModelParameters,
    gallery: Gallery,
    state: DialogState,
    relevance,
    candidate_index: int,
    cfg: TrainConfig,
    shown,
    policy_rng: np.random.Generator | None = None,
) -> SystemStep:
    """Encode one reply, advance the state, and retrieve the next candidate.

    ``policy_rng`` None selects greedily (test-time policy); a generator
    samples from the softmax over the top-K (train-time policy). When every
    record is excluded the step still produces s but no next candidate.
    """
    rec = gallery.record(candidate_index)
    r_t, enc_cache = encode_round(params, relevance, rec.attributes, rec.features, cfg.mode)
    s, new_state, cache = aggregate(params, r_t, state)
    cache.enc = enc_cache
    excluded = set(shown) if cfg.exclude_shown else set()
    try:
        result = scan_top_k(gallery.features, s, cfg.k, excluded)
    except EmptyScanError:
        result = None
    if result is None:
        next_index = None
    elif policy_rng is None:
        next_index = greedy_candidate(result)
    else:
        next_index = sample_candidate(result, policy_rng)
    return SystemStep(s=s, state=new_state, cache=cache, next_index=next_index)


def draw_negative(n_records: int, target_index: int, rng: np.random.Generator) -> int:
    """Uniform record index excluding the target (requires N >= 2)."""
    j = int(rng.integers(0, n_records - 1))
    return j + 1 if j >= target_index else j


def run_episode(
    params: ModelParameters,
    gallery: Gallery,
    cfg: TrainConfig,
    streams: EpisodeStreams,
    policy: str = "greedy",
    target_index: int | None = None,
    with_negatives: bool = False,
) -> EpisodeResult:
    """One full dialog with the simulated witness.

    The target defaults to a uniform draw from the gallery. ``policy`` is
    "greedy" or "sample". ``with_negatives`` draws one uniform non-target
    record per realized round (the triplet loss negatives).
    """
    n = len(gallery)
    if target_index is None:
        target_index = int(streams.target().integers(0, n))
    plan = derive_plan(cfg, gallery.n_attrs, streams)
    policy_rng = streams.policy() if policy == "sample" else None
    neg_rng = streams.negative() if with_negatives else None

    target_rec = gallery.record(target_index)
    candidate = initial_candidate(n, streams.init())
    result = EpisodeResult(target_index=target_index, shown=[candidate])
    state = fresh_state(params.dims)

    for t in range(cfg.rounds):
        relevance, matched = witness_round(
            target_rec, gallery.record(candidate), plan, t, cfg.mode
        )
        if matched:
            result.matched_round = t
            break
        step = system_step(
            params, gallery, state, relevance, candidate, cfg, result.shown, policy_rng
        )
        state = step.state
        negative = (
            draw_negative(n, target_index, neg_rng) if neg_rng is not None else None
        )
        result.rounds.append(
            RoundRecord(
                round_index=t,
                candidate_index=candidate,
                relevance=relevance,
                s=step.s,
                cache=step.cache,
                negative_index=negative,
            )
        )
        if step.next_index is None:
            break
        candidate = step.next_index
        result.shown.append(candidate)
    return result
