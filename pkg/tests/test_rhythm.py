import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qrs_stream.rhythm import (
    BANDS,
    CONDITIONS,
    RULES,
    RhythmLabel,
    RhythmLabeler,
    RhythmVector,
    RrModel,
    band_of,
    init_rr_model,
    label_record,
    label_rhythm,
    normal_subset,
    select_label,
)

L = RhythmLabel


def _referenced(cell):
    return sorted({c for _, alts in cell for conj in alts for c in conj})


def test_rule_table_total_by_enumeration():
    checked = 0
    for band in BANDS:
        assert set(RULES[band]) == set(RhythmLabel)
        for prev, cell in RULES[band].items():
            assert cell[-1][1] == ()  # every cell ends in an unconditioned candidate
            refs = _referenced(cell)
            for truth in itertools.product([False, True], repeat=len(refs)):
                table = dict(zip(refs, truth))
                label = select_label(band, prev, lambda c: table[c])
                assert isinstance(label, RhythmLabel)
                checked += 1
    assert checked > 35
    assert {c for band in BANDS for cell in RULES[band].values() for c in _referenced(cell)} <= set(CONDITIONS)


def test_middle_row_all_normal():
    for prev in RhythmLabel:
        assert select_label("within_2s", prev, lambda c: True) is L.N
        assert label_rhythm(RhythmVector(300, 300, 300, 300, 10), prev) is L.N


def _vec(rr, rr_prev, rr_next, nn=300.0, sigma=10.0):
    return RhythmVector(rr, rr_prev, rr_next, nn, sigma)


def test_cell_normal_above_three_sigma():
    # condition 1: rr > rr_prev + 4 sigma
    assert label_rhythm(_vec(340, 290, 300), L.N) is L.D
    # condition 1 and condition 10 false
    assert label_rhythm(_vec(340, 320, 300), L.N) is L.N_PLUS
    # condition 10 alone (rr_next > rr_prev + 4 sigma) also gives D
    assert label_rhythm(_vec(340, 320, 370), L.N) is L.D


def test_cell_compensatory_above_two_sigma():
    # conditions 5 (rr_prev > nn + 3 sigma) and 6 (rr_next > nn + 3 sigma)
    assert label_rhythm(_vec(325, 340, 340), L.C) is L.D
    assert label_rhythm(_vec(325, 340, 300), L.C) is L.N_PLUS
    assert label_rhythm(_vec(325, 300, 340), L.C) is L.N_PLUS


@pytest.mark.parametrize(
    "delta, band",
    [(31, "above_3s"), (30, "above_2s"), (21, "above_2s"), (20, "within_2s"), (-20, "within_2s"),
     (-21, "below_2s"), (-30, "below_2s"), (-31, "below_3s")],
)
def test_band_edges(delta, band):
    assert band_of(delta, 10.0) == band


def test_premature_then_compensatory_pause():
    rr = [300] * 20 + [200, 400] + [300] * 10
    fid = np.concatenate([[0], np.cumsum(rr)])
    labels = label_record(fid)
    assert labels[21] is L.P and labels[22] is L.C
    assert all(l is L.N for l in labels[:21])
    assert labels[23:] == [L.N] * (len(labels) - 23)


positive = st.integers(50, 600)


@settings(max_examples=300)
@given(positive, positive, positive, positive, st.integers(0, 40), st.sampled_from(list(RhythmLabel)),
       st.sampled_from([0.25, 0.5, 2.0, 4.0, 1024.0]))
def test_labels_scale_invariant(rr, rp, rn, nn, sigma, prev, c):
    v = RhythmVector(rr, rp, rn, nn, sigma)
    w = RhythmVector(rr * c, rp * c, rn * c, nn * c, sigma * c)
    assert label_rhythm(v, prev) is label_rhythm(w, prev)


def test_identical_intervals_init():
    assert normal_subset([300.0] * 15) == list(range(15))
    init = init_rr_model([300.0] * 15)
    assert init.model.nn == 300.0 and init.model.sigma == 0.0 and init.offset == 0


def test_outlier_excluded():
    tc = [300.0] * 7 + [600.0] + [300.0] * 7
    assert normal_subset(tc) == [i for i in range(15) if i != 7]
    assert init_rr_model(tc).model.nn == 300.0


def test_bigeminy_uses_fallback():
    tc = [200.0, 340.0] * 7 + [200.0]
    # every run of three or more alternates: coefficient of variation well above 0.1
    for a in range(15):
        for b in range(a + 3, 16):
            run = np.array(tc[a:b])
            assert run.std() / run.mean() >= 0.1
    idx = normal_subset(tc)
    assert idx == list(range(15))
    mean, std = np.mean(tc), np.std(tc)
    assert all(abs(tc[i] - mean) <= 2 * std for i in idx)


def test_init_needs_tau_intervals():
    assert init_rr_model([300.0] * 14) is None


def test_update_skipped_after_non_normal():
    for prev in (L.P, L.GP, L.D):
        m = RrModel(300.0, 5.0)
        m.update(200.0, prev)
        assert (m.nn, m.sigma, len(m.history)) == (300.0, 5.0, 0)


def test_update_fixed_point():
    m = RrModel(300.0, 5.0)
    m.update(300.0, L.N)
    assert m.nn == 300.0 and m.sigma == 0.0


@given(st.integers(0, 60), st.floats(100, 500), st.floats(100, 500))
def test_convergence_closed_form(k, start, target):
    m = RrModel(start, 0.0)
    for _ in range(k):
        m.update(target, L.N)
    assert abs(m.nn - target) == pytest.approx(0.8 ** k * abs(start - target), abs=1e-9)


def test_sigma_is_rms_of_recent_deviations():
    m = RrModel(300.0, 0.0, tau=3)
    devs = []
    for rr in (310.0, 290.0, 330.0, 300.0):
        devs.append(abs(rr - m.nn))
        m.update(rr, L.N)
    assert m.sigma == pytest.approx(np.sqrt(np.mean(np.square(devs[-3:]))))


def test_sigma_floor():
    assert RrModel(300.0, 0.0).effective_sigma == 1.0
    assert RrModel(300.0, 4.0).effective_sigma == 4.0


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(150, 450), min_size=16, max_size=60))
def test_nn_frozen_after_non_normal_labels(rr):
    fid = np.concatenate([[0], np.cumsum(rr)])
    lab = RhythmLabeler()
    history = []
    for t in fid:
        lab.push(int(t))
        if lab.model is not None:
            history.append((len(lab.labels), lab.model.nn))
    lab.finish()
    # whenever nn changed between two observations, the beat labelled just before was normal
    for (n0, nn0), (n1, nn1) in zip(history, history[1:]):
        if nn1 != nn0:
            assert any(lab.labels[i].rhythm_type == "normal" for i in range(max(n0 - 1, 0), n1))


def test_labels_back_filled_after_init():
    lab = RhythmLabeler(tau=15)
    out = []
    for k in range(15):
        out += lab.push(300 * k)
    assert out == []  # 14 intervals: model not initialized
    out += lab.push(300 * 15)
    assert [b for b, _ in out] == list(range(15))  # beat 15 waits for its next interval
    assert all(label is L.N for _, label in out)
    assert [b for b, _ in lab.push(300 * 16)] == [15]
    assert [b for b, _ in lab.finish()] == [16]


def test_short_record_all_normal():
    assert label_record([0, 200, 500, 600]) == [L.N] * 4


def test_rhythm_types():
    assert {l.rhythm_type for l in (L.N, L.N_MINUS, L.N_PLUS, L.C)} == {"normal"}
    assert (L.P.rhythm_type, L.GP.rhythm_type, L.D.rhythm_type) == ("premature", "group-premature", "delayed")
    assert str(L.N_MINUS) == "N-"
