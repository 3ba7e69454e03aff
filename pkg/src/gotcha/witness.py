"""Simulated witness: relevance feedback and the progressive-disclosure mask.

The witness holds a target face in mind. Each round it is shown one candidate
and reports, per attribute, whether the candidate agrees with the target
(+1), disagrees (-1), or stays silent (0, undisclosed). How much it discloses
is governed by a per-round proportion schedule: a fixed fraction of attribute
positions is masked to zero early on, shrinking round by round.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InputShapeError
from .seeding import stream
from .validation import as_attribute_vector, check_same_length, round_half_up

MODES = ("progressive", "full", "full-no-attr")

#: Default masked proportions per round, highest to lowest.
DEFAULT_PROPORTIONS = (0.5, 0.3, 0.2, 0.1, 0.0)


@dataclass(frozen=True)
class DisclosureSchedule:
    """Masked proportion p_t per round; non-increasing, each in [0, 1]."""

    proportions: tuple

    def __post_init__(self):
        p = tuple(float(v) for v in self.proportions)
        if len(p) == 0:
            raise ConfigError("disclosure schedule must have at least one round")
        for v in p:
            if not (0.0 <= v <= 1.0):
                raise ConfigError(f"masked proportion {v} outside [0, 1]")
        for a, b in zip(p, p[1:]):
            if b > a + 1e-12:
                raise ConfigError("masked proportions must be non-increasing")
        object.__setattr__(self, "proportions", p)

    @property
    def rounds(self) -> int:
        return len(self.proportions)

    def masked_count(self, round_index: int, n_attrs: int) -> int:
        """Number of masked entries at the given 0-based round."""
        if not 0 <= round_index < self.rounds:
            raise IndexError(
                f"round {round_index} outside schedule of {self.rounds} rounds"
            )
        return round_half_up(self.proportions[round_index] * n_attrs)

    def budget(self, round_index: int, n_attrs: int) -> int:
        """Maximum nonzero entries a witness may disclose at the round."""
        return n_attrs - self.masked_count(round_index, n_attrs)


def default_schedule(rounds: int = 5) -> DisclosureSchedule:
    """The standard schedule for 5 rounds; evenly spaced 0.5 -> 0.0 otherwise."""
    if rounds < 1:
        raise ConfigError("rounds must be >= 1")
    if rounds == len(DEFAULT_PROPORTIONS):
        return DisclosureSchedule(DEFAULT_PROPORTIONS)
    if rounds == 1:
        return DisclosureSchedule((0.0,))
    return DisclosureSchedule(tuple(np.linspace(0.5, 0.0, rounds)))


@dataclass(frozen=True)
class MaskPlan:
    """Which attribute positions stay hidden each round of one episode.

    ``order`` is one fixed permutation of attribute indices: the revealed set
    at round t is its first ``n - masked_count(t)`` entries, so revealed sets
    grow (and masked sets shrink) as nested suffixes across rounds. With
    ``resample_seed`` set, the permutation is redrawn per round instead
    (ablation mode; nesting no longer holds).
    """

    order: np.ndarray
    schedule: DisclosureSchedule
    resample_seed: int | None = None

    def __post_init__(self):
        order = np.asarray(self.order, dtype=np.int64)
        n = order.shape[0]
        if not np.array_equal(np.sort(order), np.arange(n)):
            raise ConfigError("mask plan order must be a permutation of 0..A-1")
        object.__setattr__(self, "order", order)

    @property
    def n_attrs(self) -> int:
        return int(self.order.shape[0])

    def _round_order(self, round_index: int) -> np.ndarray:
        if self.resample_seed is None:
            return self.order
        return stream(self.resample_seed, "mask-resample", round_index).permutation(
            self.n_attrs
        )

    def masked_indices(self, round_index: int) -> np.ndarray:
        k = self.schedule.masked_count(round_index, self.n_attrs)
        order = self._round_order(round_index)
        return order[self.n_attrs - k :]

    def revealed_indices(self, round_index: int) -> np.ndarray:
        k = self.schedule.masked_count(round_index, self.n_attrs)
        order = self._round_order(round_index)
        return order[: self.n_attrs - k]


def compute_relevance(candidate, target) -> np.ndarray:
    """Per-attribute agreement: elementwise product of two ±1 vectors."""
    cand = as_attribute_vector(candidate)
    targ = as_attribute_vector(target)
    check_same_length(cand, targ, "attribute vectors")
    return (cand * targ).astype(np.int8)


def make_mask_plan(
    schedule: DisclosureSchedule,
    n_attrs: int,
    seed: int,
    resample_per_round: bool = False,
) -> MaskPlan:
    """Draw the episode's disclosure plan: one uniform random permutation."""
    if n_attrs < 1:
        raise ConfigError("n_attrs must be >= 1")
    if schedule.rounds == 0:
        raise ConfigError("empty disclosure schedule")
    order = stream(seed, "mask-order").permutation(n_attrs)
    return MaskPlan(
        order=order,
        schedule=schedule,
        resample_seed=seed if resample_per_round else None,
    )


def apply_mask(relevance, plan: MaskPlan, round_index: int) -> np.ndarray:
    """Zero out the plan's masked positions for the round."""
    rel = np.asarray(relevance, dtype=np.int8)
    if rel.ndim != 1 or rel.shape[0] != plan.n_attrs:
        raise InputShapeError(
            f"relevance length {rel.shape} does not match plan ({plan.n_attrs},)"
        )
    if np.any(rel == 0):
        raise InputShapeError("apply_mask expects an unmasked relevance vector")
    out = rel.copy()
    out[plan.masked_indices(round_index)] = 0
    return out


def witness_round(target, candidate, plan: MaskPlan, round_index: int, mode: str):
    """One witness reply: (relevance vector, matched flag).

    ``target`` and ``candidate`` are gallery records. A match (same record id)
    short-circuits the dialog; the relevance is still returned. Progressive
    mode masks the reply per the plan; the full modes disclose everything.
    """
    if mode not in MODES:
        raise ConfigError(f"unknown disclosure mode {mode!r}")
    matched = candidate.id == target.id
    relevance = compute_relevance(candidate.attributes, target.attributes)
    if mode == "progressive":
        relevance = apply_mask(relevance, plan, round_index)
    return relevance, matched
