import copy

import numpy as np
import pytest

from qrs_stream.config import RunConfig
from qrs_stream.pipeline import STAGES, Engine, process_record
from qrs_stream.preprocess import remove_baseline
from qrs_stream.synthetic import bigeminy_stream


def _fids(stream):
    return [a.sample_index for a in stream.annotations]


def test_bigeminy_two_alternating_clusters(bigeminy_run):
    stream, result = bigeminy_run
    clusters = result.clusters
    assert len(set(clusters)) == 2
    assert all(a != b for a, b in zip(clusters, clusters[1:]))
    assert result.report.purity == 1.0


def test_dropout_beat_creates_then_revised_to_closest(bigeminy_run):
    stream, result = bigeminy_run
    (k,) = stream.artifact_beats
    assign = next(e for e in result.events if e.kind in ("assign", "failed") and e.beat == k)
    assert assign.created
    revise = [e for e in result.events if e.kind == "revise" and e.beat == k]
    assert len(revise) == 1 and revise[0].reason == "noise-delete"
    assert revise[0].old == assign.cluster and revise[0].cluster == result.clusters[k - 2]


def test_every_beat_has_one_final_event(bigeminy_run):
    _, result = bigeminy_run
    finals = [e for e in result.events if e.kind == "final"]
    assert [e.beat for e in finals] == list(range(len(result.fiducials)))
    assert [e.cluster for e in finals] == result.clusters
    assert [e.rhythm for e in finals] == [str(label) for label in result.rhythm]


def test_no_event_after_final(bigeminy_run):
    _, result = bigeminy_run
    seen = set()
    for e in result.events:
        if e.beat is not None and e.kind in ("assign", "failed", "revise", "final"):
            assert e.beat not in seen
            if e.kind == "final":
                seen.add(e.beat)


def test_finals_within_latency_bound():
    stream = bigeminy_stream(120, dropout_beats=(40,), seed=3)
    signal = remove_baseline(stream.record)
    cfg = RunConfig()
    engine = Engine(stream.record.sampling_rate_hz, 2, cfg)
    lag = []
    for n, t in enumerate(_fids(stream)):
        for e in engine.process_beat(signal, t):
            if e.kind == "final":
                lag.append(n - e.beat)
    assert lag and max(lag) <= cfg.tau_context
    tail = [e.beat for e in engine.finish() if e.kind == "final"]
    assert len(lag) + len(tail) == 120


def test_deterministic_events():
    stream = bigeminy_stream(80, dropout_beats=(30,), seed=5)
    a = process_record(stream.record, _fids(stream), stream.classes)
    b = process_record(stream.record, _fids(stream), stream.classes)
    assert [e.to_line() for e in a.events] == [e.to_line() for e in b.events]


def test_clean_stream_has_no_deletion():
    stream = bigeminy_stream(120, seed=2)
    result = process_record(stream.record, _fids(stream), stream.classes)
    assert not [e for e in result.events if e.kind == "revise"]
    assert len(set(result.clusters)) == 2


def test_rhythm_labels_back_filled(bigeminy_run):
    _, result = bigeminy_run
    assert len(result.rhythm) == len(result.fiducials)
    # the first beats precede the rhythm model but still carry a label
    assert all(str(label) for label in result.rhythm[:15])


def test_failed_beat_never_touches_templates():
    stream = bigeminy_stream(60, artifact_beats=(40,), artifact_uv=2500.0, seed=4)
    signal = remove_baseline(stream.record)
    engine = Engine(stream.record.sampling_rate_hz, 2)
    fids = _fids(stream)
    for t in fids[:40]:
        engine.process_beat(signal, t)
    before = copy.deepcopy({cid: c.leads for cid, c in engine.clusters.clusters.items()})
    events = engine.process_beat(signal, fids[40])
    assert events[0].kind == "failed"
    for cid, leads in before.items():
        if cid in engine.clusters.clusters:
            for old, new in zip(leads, engine.clusters.clusters[cid].leads):
                np.testing.assert_array_equal(old.q, new.q)


def test_boundary_beats_skipped():
    stream = bigeminy_stream(20, seed=0)
    fids = [5] + _fids(stream) + [len(stream.record) - 3]
    labels = ["N"] + stream.classes + ["N"]
    result = process_record(stream.record, fids, labels)
    skips = [e for e in result.events if e.kind == "skip"]
    assert [e.t for e in skips] == [5, len(stream.record) - 3]
    assert result.skipped == [5, len(stream.record) - 3]
    assert len(result.fiducials) == 20


def test_timing_report_populated(bigeminy_run):
    _, result = bigeminy_run
    summary = result.timing.summary()
    assert set(summary) == {*STAGES, "total"}
    for stage in STAGES:
        assert len(result.timing.per_beat[stage]) == len(result.fiducials)
        assert summary[stage]["mean_ms"] >= 0.0
    assert summary["total"]["max_ms"] >= summary["total"]["mean_ms"] > 0.0


def test_event_line_format():
    from qrs_stream.pipeline import BeatEvent

    line = BeatEvent("assign", 3, 900, 2, noise=(False, True), created=True).to_line()
    assert line == "event=assign beat=3 t=900 cluster=2 new=1 noise=01"
    assert BeatEvent("revise", 1, 10, 2, 5, "merge").to_line() == "event=revise beat=1 t=10 cluster=2 old=5 reason=merge"
