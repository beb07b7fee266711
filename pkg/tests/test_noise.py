import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qrs_stream.characterize import BeatRepresentation, LeadShape, RelevantPoint
from qrs_stream.match import MatchScore
from qrs_stream.noise import (
    BeatNoise,
    Creation,
    LeadState,
    NoiseTracker,
    assignment_condition,
    beat_noise_check,
    noise_intervals,
)


def lead_with(n_dominant, n_relevant):
    pts = [RelevantPoint(i, 0.0, i, i, True, 1.0) for i in range(n_relevant)]
    return LeadShape(np.zeros(10), np.arange(n_dominant), pts, np.zeros(10))


def beat_with(*counts):
    return BeatRepresentation(0, 0, [lead_with(d, r) for d, r in counts])


def score(s_norm, ps_norm):
    return MatchScore(0.0, s_norm, 0.0, 0.0, 0.0, ps_norm)


def test_clean_three_wave_qrs():
    flags = beat_noise_check(beat_with((3, 3), (2, 2)))
    assert flags.noisy == (False, False) and not flags.failed


def test_many_waves_on_one_lead():
    flags = beat_noise_check(beat_with((8, 2), (3, 3)))
    assert flags.noisy == (True, False) and flags.active == (True, True)


def test_distorted_everywhere_fails():
    flags = beat_noise_check(beat_with((9, 7), (10, 8)))
    assert flags.failed and flags.active == (False, False)


def test_distorted_lead_ignored():
    flags = beat_noise_check(beat_with((9, 7), (3, 3)))
    assert not flags.failed and flags.active == (False, True)


def test_assignment_condition():
    assert assignment_condition(score(0.5, 0.0), False)
    assert assignment_condition(score(0.1, 0.35), True)
    assert not assignment_condition(score(0.9, 0.1), True)


def test_interval_ends_before_clean_run():
    inside, _ = noise_intervals([True, False, False, False], [False, True, True, True])
    assert inside == [True, False, False, False]


def test_interval_continues_after_short_run():
    inside, _ = noise_intervals([True, False, False, True, False], [False, True, True, False, True])
    assert inside == [True, True, True, True, True]


def test_unconfident_beat_breaks_run():
    inside, _ = noise_intervals([True, False, False, False, False, False],
                                [False, True, False, True, True, True])
    assert inside == [True, True, True, False, False, False]


def test_quiet_lead_never_noisy():
    inside, states = noise_intervals([False] * 10, [True, False] * 5)
    assert not any(inside) and not any(s.in_interval for s in states)


def intervals_oracle(noisy, free, kappa):
    n = len(noisy)
    clean = [f and not b for b, f in zip(noisy, free)]
    run_starts = {s for s in range(n - kappa + 1) if all(clean[s:s + kappa])}
    out = []
    for i in range(n):
        opened = [p for p in range(i + 1) if noisy[p]]
        out.append(any(not any(p < s <= i for s in run_starts) for p in opened))
    return out


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.booleans(), st.booleans()), max_size=40), st.integers(1, 5))
def test_intervals_match_oracle(pairs, kappa):
    noisy = [a for a, _ in pairs]
    free = [b for _, b in pairs]
    inside, _ = noise_intervals(noisy, free, kappa)
    assert inside == intervals_oracle(noisy, free, kappa)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.booleans(), st.booleans()), min_size=1, max_size=40), st.data())
def test_tracker_incremental_matches_batch(pairs, data):
    """Feeding beats one at a time ends in the same flags as a batch pass."""
    tr = NoiseTracker(1, tau=15, kappa=3)
    for noisy, free in pairs:
        tr.record(BeatNoise((noisy,), (False,)), [free])
    batch, _ = noise_intervals([a for a, _ in pairs], [b for _, b in pairs], 3)
    assert [row[0] for row in tr.lead_noise] == batch


def _feed(tr, rows):
    """rows: (noisy flags, noise-free flags, creation or None)."""
    for noisy, free, creation in rows:
        tr.record(BeatNoise(tuple(noisy), (False,) * len(noisy)), free, creation)


def test_isolated_artifact_creation_deleted():
    tr = NoiseTracker(2, tau=15, kappa=3)
    rows = [((False, False), (True, True), None)] * 5
    rows.append(((False, True), (True, False), Creation(5, 9, frozenset({1}), False, True)))
    rows += [((False, False), (True, True), None)] * 14
    _feed(tr, rows)
    assert tr.due(len(tr) - 1) == [5]
    result = tr.review(5, lambda c: True)
    assert [c.cluster for c in result.deleted] == [9]
    assert not result.proliferation


def test_creation_resembling_winner_deleted():
    # the beat is clean but the relaxed score would have matched: bullet-2 hypothesis
    tr = NoiseTracker(2, tau=15, kappa=3)
    rows = [((False, False), (True, True), None)] * 3
    rows.append(((False, False), (True, False), Creation(3, 4, frozenset({1}), True, True)))
    rows += [((False, False), (True, True), None)] * 14
    _feed(tr, rows)
    result = tr.review(3, lambda c: True)
    assert [c.cluster for c in result.deleted] == [4]


def test_sustained_new_morphology_kept():
    tr = NoiseTracker(2, tau=15, kappa=3)
    rows = [((False, False), (True, True), None)] * 4
    rows.append(((False, False), (True, True), Creation(4, 2, frozenset({0, 1}), False, True)))
    rows += [((False, False), (True, True), None)] * 14
    _feed(tr, rows)
    assert tr.review(4, lambda c: True).deleted == []


def test_proliferation_on_one_lead():
    tr = NoiseTracker(2, tau=15, kappa=3)
    rows = []
    for i in range(15):
        creation = Creation(i, 10 + i, frozenset({1}), False, True) if i % 2 == 0 and i < 12 else None
        rows.append(((False, False), (True, creation is None), creation))
    _feed(tr, rows)
    result = tr.review(0, lambda c: True)
    assert result.proliferation and result.common_leads == {1}
    assert result.hypothesis[:, 1].all()
    assert sorted(c.cluster for c in result.deleted) == [10, 12, 14, 16, 18, 20]


def test_five_creations_are_not_proliferation():
    tr = NoiseTracker(2, tau=15, kappa=3)
    rows = []
    for i in range(15):
        creation = Creation(i, 10 + i, frozenset({1}), False, True) if i % 3 == 0 else None
        rows.append(((False, False), (True, True), creation))
    _feed(tr, rows)
    assert not tr.review(0, lambda c: True).proliferation


def test_creation_without_closest_is_kept():
    tr = NoiseTracker(1, tau=5, kappa=3)
    _feed(tr, [((True,), (False,), Creation(0, 1, frozenset({0}), False, False))] + [((False,), (True,), None)] * 4)
    assert tr.review(0, lambda c: True).deleted == []


def test_apply_marks_deleted_beat_noisy_and_drops_its_window():
    tr = NoiseTracker(2, tau=15, kappa=3)
    rows = [((False, False), (True, True), None)] * 2
    rows.append(((False, True), (True, False), Creation(2, 5, frozenset({1}), False, True)))
    rows.append(((False, True), (True, False), Creation(3, 6, frozenset({1}), False, True)))
    rows += [((False, False), (True, True), None)] * 13
    _feed(tr, rows)
    result = tr.review(2, lambda c: True)
    assert {c.beat for c in result.deleted} == {2, 3}
    tr.apply(result)
    assert tr.pending == [] and tr.beat_noise[2][1] and not tr.noise_free[3][1]


def test_cancel_and_due():
    tr = NoiseTracker(1, tau=4, kappa=3)
    _feed(tr, [((False,), (True,), Creation(0, 1, frozenset(), False, False))])
    assert tr.due(2) == [] and tr.due(3) == [0]
    tr.cancel(0)
    assert tr.pending == []


def test_selection_noisy_uses_current_flags_and_open_interval():
    tr = NoiseTracker(2, tau=15, kappa=3)
    _feed(tr, [((True, False), (False, True), None)])
    assert tr.selection_noisy(BeatNoise((False, True), (False, False))) == [True, True]
