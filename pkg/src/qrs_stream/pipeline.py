"""Beat-by-beat processing engine and its event stream.

Every beat produces an ``assign`` event as soon as it is clustered.  Noise
review may later move it (``revise`` events), merges are announced at the
cluster level (``merge`` events), and a ``final`` event carrying the rhythm
label is emitted once no review window can touch the beat any more.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .characterize import WaveParams, characterize_beat
from .clusters import ClusterSet, MergeRecord, select_cluster
from .config import RunConfig
from .evaluate import EvaluationReport, evaluate
from .io import EcgRecord, is_beat, read_annotations, read_signal
from .noise import Creation, NoiseTracker, beat_noise_check
from .preprocess import BoundarySkip, QrsWindow, extract_window, remove_baseline
from .rhythm import RhythmLabel, RhythmLabeler

STAGES = ("characterize", "noise", "select", "update", "rhythm")


@dataclass
class BeatEvent:
    kind: str  # assign | failed | revise | merge | final | skip
    beat: int | None = None
    t: int | None = None
    cluster: int | None = None
    old: int | None = None
    reason: str | None = None
    rhythm: str | None = None
    noise: tuple[bool, ...] | None = None
    created: bool | None = None

    def to_line(self) -> str:
        parts = [f"event={self.kind}"]
        for key in ("beat", "t", "cluster", "old", "reason", "rhythm"):
            value = getattr(self, key)
            if value is not None:
                parts.append(f"{key}={value}")
        if self.created is not None:
            parts.append(f"new={int(self.created)}")
        if self.noise is not None:
            parts.append("noise=" + "".join("1" if f else "0" for f in self.noise))
        return " ".join(parts)


@dataclass
class TimingReport:
    per_beat: dict[str, list[float]] = field(default_factory=lambda: {s: [] for s in STAGES})

    def add(self, stage: str, seconds: float) -> None:
        self.per_beat[stage].append(seconds)

    def totals(self) -> np.ndarray:
        n = min(len(v) for v in self.per_beat.values())
        return np.sum([v[:n] for v in self.per_beat.values()], axis=0) if n else np.zeros(0)

    def summary(self) -> dict[str, dict[str, float]]:
        """Max and mean milliseconds per beat for every stage and in total."""
        out = {}
        for stage, values in [*self.per_beat.items(), ("total", list(self.totals()))]:
            arr = np.asarray(values, dtype=float) * 1000.0
            out[stage] = {
                "max_ms": float(arr.max()) if arr.size else 0.0,
                "mean_ms": float(arr.mean()) if arr.size else 0.0,
            }
        return out

    def to_csv(self) -> str:
        lines = ["stage,max_ms,mean_ms"]
        for stage, v in self.summary().items():
            lines.append(f"{stage},{v['max_ms']:.3f},{v['mean_ms']:.3f}")
        return "\n".join(lines) + "\n"


class Engine:
    """Owns all mutable state of one record's clustering."""

    def __init__(self, fs: float, n_leads: int, config: RunConfig | None = None) -> None:
        self.config = config = config or RunConfig()
        self.fs = fs
        self.n_leads = n_leads
        self.params = WaveParams.from_config(config, fs)
        self.clusters = ClusterSet(config, self.params)
        self.noise = NoiseTracker(n_leads, config.tau_context, config.kappa_noise_free, config.eta_max_waves)
        self.rhythm = RhythmLabeler(config.tau_context, config.theta_rr)
        self.timing = TimingReport()
        self.fiducials: list[int] = []
        self.assigned: list[int] = []  # cluster id given at assignment time
        self.shown: list[int] = []  # last cluster id emitted for the beat
        self.failed: list[bool] = []
        self.labels: dict[int, RhythmLabel] = {}
        self.n_final = 0

    # -- per-beat processing -----------------------------------------------------

    def process_beat(self, record: EcgRecord, t: int) -> list[BeatEvent]:
        """Process the beat at fiducial ``t`` of a baseline-filtered record."""
        try:
            windows = extract_window(record, t)
        except BoundarySkip:
            return [BeatEvent("skip", t=int(t))]
        return self.process_windows(windows, t)

    def process_windows(self, windows: list[QrsWindow], t: int) -> list[BeatEvent]:
        cfg = self.config
        cs = self.clusters
        n = len(self.assigned)
        clock = time.perf_counter

        tic = clock()
        beat = characterize_beat(windows, self.params, n, int(t))
        self.timing.add("characterize", clock() - tic)

        tic = clock()
        flags = beat_noise_check(beat, cfg.eta_max_waves)
        noisy = self.noise.selection_noisy(flags)
        noise_time = clock() - tic

        tic = clock()
        outcome = select_cluster(beat, cs, noisy, flags.active)
        self.timing.add("select", clock() - tic)

        tic = clock()
        merges: list[MergeRecord] = []
        active = [l for l in range(self.n_leads) if flags.active[l]]
        if outcome.assigned:
            cid = outcome.cluster
            cs.assign(n, cid)
            if not flags.failed:
                cs.update_template(cid, beat, outcome.paths[cid], active)
                merges = cs.post_assignment_checks(outcome)
        else:
            cid = cs.register_new_cluster(beat, outcome.winner)
            outcome.cluster = cid
        self.timing.add("update", clock() - tic)

        self.fiducials.append(int(t))
        self.assigned.append(cid)
        self.shown.append(cid)
        self.failed.append(flags.failed)
        events = [BeatEvent("failed" if flags.failed else "assign", n, int(t), cid,
                            noise=flags.noisy, created=not outcome.assigned)]
        for rec in merges:
            events.append(BeatEvent("merge", n, cluster=rec.survivor, old=rec.absorbed))
            events += self._revise(rec.moved, "merge")

        tic = clock()
        events += self._noise_step(outcome, flags, active)
        self.timing.add("noise", noise_time + clock() - tic)

        tic = clock()
        for b, label in self.rhythm.push(int(t)):
            self.labels[b] = label
        self.timing.add("rhythm", clock() - tic)

        events += self._finalize(n - cfg.tau_context + 1)
        return events

    def _noise_step(self, outcome, flags, active) -> list[BeatEvent]:
        cfg = self.config
        cs = self.clusters
        creation = None
        if flags.failed:
            free = [False] * self.n_leads
        elif outcome.assigned:
            scores = outcome.scores[outcome.cluster]
            free = [l in active and scores[l].s_norm > cfg.gamma for l in range(self.n_leads)]
        else:
            # a clean beat that opens a new cluster counts as noise-free
            free = [l in active for l in range(self.n_leads)]
            win = outcome.winner
            if win is not None:
                scores = outcome.scores[win]
                noise_leads = frozenset(l for l in active if scores[l].s_norm <= cfg.gamma)
                resembles = bool(noise_leads) and all(
                    scores[l].ps_on_template_norm > cfg.gamma for l in noise_leads
                )
            else:
                noise_leads, resembles = frozenset(), False
            creation = Creation(len(self.assigned) - 1, outcome.cluster, noise_leads, resembles,
                                outcome.cluster in cs.closest)
        head = self.noise.record(flags, free, creation)
        return self._run_reviews(head)

    def _run_reviews(self, head: int) -> list[BeatEvent]:
        events = []
        cs = self.clusters
        alive = cs.__contains__
        for trigger in sorted(self.noise.due(head)):
            if trigger not in self.noise.pending:
                continue
            if not alive(self.noise.creations[trigger].cluster):
                self.noise.cancel(trigger)
                continue
            result = self.noise.review(trigger, alive)
            for c in result.deleted:
                if c.cluster not in cs.clusters or c.cluster not in cs.closest:
                    continue
                _, moved = cs.delete(c.cluster)
                events += self._revise(moved, "noise-delete")
            self.noise.apply(result)
        return events

    def _revise(self, beats: Sequence[int], reason: str) -> list[BeatEvent]:
        events = []
        for b in beats:
            new = self.clusters.resolve(self.shown[b])
            if b >= self.n_final and new != self.shown[b]:
                events.append(BeatEvent("revise", b, self.fiducials[b], new, self.shown[b], reason))
                self.shown[b] = new
        return events

    def _finalize(self, upto: int) -> list[BeatEvent]:
        """Emit final events for beats ``< upto`` whose rhythm label is known."""
        events = []
        while self.n_final < min(upto, len(self.assigned)) and self.n_final in self.labels:
            b = self.n_final
            cid = self.clusters.resolve(self.assigned[b])
            self.shown[b] = cid
            events.append(BeatEvent("final", b, self.fiducials[b], cid, rhythm=str(self.labels[b])))
            self.n_final += 1
        return events

    def finish(self) -> list[BeatEvent]:
        """Close the record: label the last beats and run the truncated reviews."""
        events = []
        for b, label in self.rhythm.finish():
            self.labels[b] = label
        if self.assigned:
            events += self._run_reviews(len(self.assigned) - 1 + self.config.tau_context)
        events += self._finalize(len(self.assigned))
        return events

    # -- results -----------------------------------------------------------------

    def final_clusters(self) -> list[int]:
        return [self.clusters.resolve(c) for c in self.assigned]

    def rhythm_labels(self) -> list[RhythmLabel]:
        return [self.labels[b] for b in range(len(self.assigned))]


@dataclass
class RunResult:
    engine: Engine
    events: list[BeatEvent]
    fiducials: list[int]
    true_labels: list[str]
    skipped: list[int]
    report: EvaluationReport | None = None

    @property
    def clusters(self) -> list[int]:
        return self.engine.final_clusters()

    @property
    def rhythm(self) -> list[RhythmLabel]:
        return self.engine.rhythm_labels()

    @property
    def timing(self) -> TimingReport:
        return self.engine.timing


def process_record(
    record: EcgRecord,
    fiducials: Sequence[int],
    labels: Sequence[str] | None = None,
    config: RunConfig | None = None,
    evaluate_groups: bool = False,
    label_space: str = "mitbih",
    max_groups: int | None = None,
    filtered: bool = False,
) -> RunResult:
    """Run the whole pipeline over one record held in memory."""
    config = config or RunConfig()
    labels = list(labels) if labels is not None else ["?"] * len(fiducials)
    signal = record if filtered else remove_baseline(record)
    engine = Engine(record.sampling_rate_hz, record.n_leads, config)
    events: list[BeatEvent] = []
    kept_t, kept_labels, skipped = [], [], []
    for t, label in zip(fiducials, labels):
        out = engine.process_beat(signal, int(t))
        events += out
        if out and out[0].kind == "skip":
            skipped.append(int(t))
        else:
            kept_t.append(int(t))
            kept_labels.append(label)
    events += engine.finish()
    result = RunResult(engine, events, kept_t, kept_labels, skipped)
    if evaluate_groups:
        types = [label.rhythm_type for label in engine.rhythm_labels()]
        cap = max_groups if max_groups is not None else config.max_groups
        result.report = evaluate(engine.final_clusters(), types, kept_labels, cap, label_space)
    return result


def run_record(
    signal_path: str | Path,
    annotation_path: str | Path,
    config: RunConfig | None = None,
    evaluate_groups: bool = False,
    label_space: str = "mitbih",
    max_groups: int | None = None,
) -> RunResult:
    """Read a signal and its annotations from disk and process them.

    Non-beat annotation codes (rhythm changes, comments, ...) are dropped.
    """
    record = read_signal(signal_path)
    annotations = [a for a in read_annotations(annotation_path) if is_beat(a)]
    return process_record(
        record,
        [a.sample_index for a in annotations],
        [a.class_label for a in annotations],
        config,
        evaluate_groups,
        label_space,
        max_groups,
    )
