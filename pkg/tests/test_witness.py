import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gotcha.errors import ConfigError, InputShapeError
from gotcha.gallery import GalleryRecord
from gotcha.witness import (
    DEFAULT_PROPORTIONS,
    DisclosureSchedule,
    apply_mask,
    compute_relevance,
    default_schedule,
    make_mask_plan,
    witness_round,
)

signed_units = st.lists(st.sampled_from([-1, 1]), min_size=1, max_size=64)


def test_relevance_identity():
    v = np.array([1, -1, 1, 1, -1], dtype=np.int8)
    assert np.array_equal(compute_relevance(v, v), np.ones(5, dtype=np.int8))


def test_relevance_negation():
    v = np.array([1, -1, 1], dtype=np.int8)
    assert np.array_equal(compute_relevance(v, -v), -np.ones(3, dtype=np.int8))


def test_relevance_forced_example():
    cand = [1, -1, 1, 1]
    targ = [1, 1, -1, 1]
    assert compute_relevance(cand, targ).tolist() == [1, -1, -1, 1]


def test_relevance_length_mismatch():
    with pytest.raises(InputShapeError):
        compute_relevance([1, -1], [1, -1, 1])


def test_relevance_rejects_zeros():
    with pytest.raises(InputShapeError):
        compute_relevance([1, 0, -1], [1, 1, 1])


@given(signed_units.flatmap(lambda c: st.tuples(st.just(c), st.permutations(c))))
def test_relevance_involution(pair):
    cand, targ = np.array(pair[0]), np.array(pair[1])
    rel = compute_relevance(cand, targ)
    # multiplying the relevance by the target recovers the candidate
    assert np.array_equal(rel * targ, cand)
    assert not np.any(rel == 0)


def test_schedule_must_be_non_increasing():
    with pytest.raises(ConfigError):
        DisclosureSchedule((0.3, 0.5))


def test_schedule_rejects_out_of_range():
    with pytest.raises(ConfigError):
        DisclosureSchedule((1.5, 0.0))


def test_empty_schedule_rejected():
    with pytest.raises(ConfigError):
        DisclosureSchedule(())


def test_default_schedule_masked_counts():
    plan = make_mask_plan(default_schedule(5), 40, seed=3)
    counts = [len(plan.masked_indices(t)) for t in range(5)]
    assert counts == [20, 12, 8, 4, 0]


def test_mask_plan_deterministic():
    a = make_mask_plan(default_schedule(5), 40, seed=9)
    b = make_mask_plan(default_schedule(5), 40, seed=9)
    assert np.array_equal(a.order, b.order)


def test_zero_schedule_reveals_everything():
    plan = make_mask_plan(DisclosureSchedule((0.0, 0.0)), 12, seed=1)
    for t in range(2):
        assert len(plan.revealed_indices(t)) == 12


def test_apply_mask_final_round_is_identity():
    plan = make_mask_plan(default_schedule(5), 40, seed=2)
    rel = np.ones(40, dtype=np.int8)
    assert np.array_equal(apply_mask(rel, plan, 4), rel)


def test_apply_mask_first_round_zero_count():
    plan = make_mask_plan(default_schedule(5), 40, seed=2)
    rel = np.ones(40, dtype=np.int8)
    assert int(np.sum(apply_mask(rel, plan, 0) == 0)) == 20


def test_apply_mask_round_two_counts():
    plan = make_mask_plan(default_schedule(5), 40, seed=5)
    out = apply_mask(np.ones(40, dtype=np.int8), plan, 1)
    assert int(np.sum(out == 0)) == 12
    assert int(np.sum(out == 1)) == 28


def test_apply_mask_round_out_of_range():
    plan = make_mask_plan(default_schedule(5), 8, seed=0)
    with pytest.raises(IndexError):
        plan.masked_indices(5)


def test_apply_mask_rejects_masked_input():
    plan = make_mask_plan(default_schedule(5), 4, seed=0)
    with pytest.raises(InputShapeError):
        apply_mask(np.array([1, 0, 1, 1], dtype=np.int8), plan, 0)


@settings(max_examples=60)
@given(
    n_attrs=st.integers(min_value=1, max_value=64),
    seed=st.integers(min_value=0, max_value=2**31),
    proportions=st.lists(
        st.floats(min_value=0.0, max_value=1.0), min_size=1, max_size=6
    ).map(lambda ps: tuple(sorted(ps, reverse=True))),
)
def test_mask_counts_exact_and_nested(n_attrs, seed, proportions):
    schedule = DisclosureSchedule(proportions)
    plan = make_mask_plan(schedule, n_attrs, seed)
    rel = np.ones(n_attrs, dtype=np.int8)
    previous = None
    for t in range(schedule.rounds):
        masked = apply_mask(rel, plan, t)
        zeros = set(np.flatnonzero(masked == 0).tolist())
        assert len(zeros) == schedule.masked_count(t, n_attrs)
        if previous is not None:
            assert zeros <= previous
        previous = zeros


def test_resampled_plan_keeps_counts():
    plan = make_mask_plan(default_schedule(5), 40, seed=11, resample_per_round=True)
    rel = np.ones(40, dtype=np.int8)
    counts = [int(np.sum(apply_mask(rel, plan, t) == 0)) for t in range(5)]
    assert counts == [20, 12, 8, 4, 0]
    # same plan, same round: the redraw is still deterministic
    again = [int(np.sum(apply_mask(rel, plan, t) == 0)) for t in range(5)]
    assert counts == again


def _record(rid, attrs):
    attrs = np.asarray(attrs, dtype=np.int8)
    return GalleryRecord(id=rid, attributes=attrs, features=np.zeros(2, dtype=np.float32))


def test_witness_round_match_is_by_id():
    plan = make_mask_plan(default_schedule(5), 4, seed=0)
    target = _record("a", [1, 1, -1, 1])
    twin = _record("b", [1, 1, -1, 1])
    rel, matched = witness_round(target, twin, plan, 0, "full")
    assert not matched
    assert np.array_equal(rel, np.ones(4, dtype=np.int8))
    _, matched_self = witness_round(target, target, plan, 0, "full")
    assert matched_self


def test_witness_full_mode_never_masks():
    plan = make_mask_plan(default_schedule(5), 40, seed=4)
    target = _record("t", np.ones(40, dtype=np.int8))
    cand = _record("c", np.ones(40, dtype=np.int8))
    for t in range(5):
        rel, _ = witness_round(target, cand, plan, t, "full")
        assert not np.any(rel == 0)


def test_witness_progressive_first_round():
    plan = make_mask_plan(default_schedule(5), 40, seed=4)
    target = _record("t", np.ones(40, dtype=np.int8))
    cand = _record("c", -np.ones(40, dtype=np.int8))
    rel, matched = witness_round(target, cand, plan, 0, "progressive")
    assert not matched
    assert int(np.sum(rel == 0)) == 20


def test_progressive_zero_schedule_equals_full():
    schedule = DisclosureSchedule((0.0, 0.0, 0.0))
    plan = make_mask_plan(schedule, 12, seed=6)
    rng = np.random.default_rng(0)
    target = _record("t", rng.choice([-1, 1], size=12))
    cand = _record("c", rng.choice([-1, 1], size=12))
    for t in range(3):
        a, _ = witness_round(target, cand, plan, t, "progressive")
        b, _ = witness_round(target, cand, plan, t, "full")
        assert np.array_equal(a, b)


def test_witness_unknown_mode():
    plan = make_mask_plan(default_schedule(5), 4, seed=0)
    target = _record("t", [1, 1, 1, 1])
    with pytest.raises(ConfigError):
        witness_round(target, target, plan, 0, "verbose")


def test_default_proportions_value():
    assert DEFAULT_PROPORTIONS == (0.5, 0.3, 0.2, 0.1, 0.0)
