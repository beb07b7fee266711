"""Dynamic cluster set: context-first selection, template update and merging.

Every cluster keeps one template per lead (a QRS window plus its relevant
points).  A beat is first compared with the clusters seen among the last
``tau`` beats; only if none of them is similar enough in every lead are the
remaining clusters searched.  Templates follow their beats through an
exponential update of the first differences, and a ``closest`` relation
links each cluster with its most similar older one so that clusters which
drift together can be merged.
"""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .align import WarpingPath, ddtw_path
from .characterize import BeatRepresentation, LeadShape, WaveParams, characterize_lead
from .config import RunConfig
from .match import MatchScore, compare_leads


@dataclass
class ClusterTemplate:
    id: int
    leads: list[LeadShape]
    created_at: int
    last_assigned: int
    beat_count: int = 1
    members: list[int] = field(default_factory=list)

    @property
    def width(self) -> int:
        return int(self.leads[0].q.size)


@dataclass
class MergeRecord:
    absorbed: int
    survivor: int
    moved: list[int]  # beat indices that changed cluster


@dataclass
class SelectionOutcome:
    """Result of searching the cluster set for a beat.

    ``decision`` is ``"assigned"`` (``cluster`` holds the id) or
    ``"created"`` (``cluster`` is filled in once the new cluster is
    registered).  ``winner`` is the most similar existing cluster, ``None``
    only when the set was empty.
    """

    decision: str
    cluster: int | None
    winner: int | None
    in_context: bool = False
    out_of_context: bool = False
    votes: list[int | None] = field(default_factory=list)
    scores: dict[int, list[MatchScore | None]] = field(default_factory=dict, repr=False)
    paths: dict[int, list[WarpingPath | None]] = field(default_factory=dict, repr=False)
    searched: list[int] = field(default_factory=list)
    qualifying: list[int] = field(default_factory=list)

    @property
    def assigned(self) -> bool:
        return self.decision == "assigned"


def _mean_aligned(source_d: np.ndarray, path: WarpingPath, size: int) -> np.ndarray:
    """Mean of ``source_d[x]`` over the path pairs ``(x, y)`` for every ``y``."""
    sums = np.bincount(path.y, weights=source_d[path.x], minlength=size)
    counts = np.bincount(path.y, minlength=size)
    return sums / np.maximum(counts, 1)


def blend_template(
    template_q: np.ndarray, source_q: np.ndarray, path: WarpingPath, beta: float
) -> np.ndarray:
    """Exponential update of a template by an aligned signal.

    ``path.x`` indexes ``source_q`` and ``path.y`` the template.  The first
    differences are blended and the signal rebuilt from the unchanged first
    sample.
    """
    template_q = np.asarray(template_q, dtype=float)
    d_old = np.diff(template_q)
    d_new = _mean_aligned(np.diff(np.asarray(source_q, dtype=float)), path, d_old.size)
    d = (1.0 - beta) * d_old + beta * d_new
    return np.concatenate([[template_q[0]], template_q[0] + np.cumsum(d)])


class ClusterSet:
    def __init__(self, config: RunConfig, params: WaveParams) -> None:
        self.config = config
        self.params = params
        self.clusters: dict[int, ClusterTemplate] = {}
        self.closest: dict[int, int] = {}
        self.forward: dict[int, int] = {}
        self.context: deque[int] = deque(maxlen=config.tau_context)
        self.next_id = 1

    def __len__(self) -> int:
        return len(self.clusters)

    def __contains__(self, cid: int) -> bool:
        return cid in self.clusters

    def resolve(self, cid: int) -> int:
        """Follow merges and deletions to the live cluster holding ``cid``'s beats."""
        while cid in self.forward:
            cid = self.forward[cid]
        return cid

    def context_ids(self) -> list[int]:
        return sorted({self.resolve(c) for c in self.context})

    def _compare(self, a: LeadShape, b: LeadShape) -> tuple[MatchScore, WarpingPath]:
        cfg = self.config
        return compare_leads(a, b, cfg.delta_band_samples, cfg.lambda_slope, cfg.rho_min_uv, cfg.alpha_sigmoid)

    def score_beat(
        self, beat: BeatRepresentation, cid: int, leads: Sequence[int]
    ) -> tuple[list[MatchScore | None], list[WarpingPath | None]]:
        tmpl = self.clusters[cid]
        scores: list[MatchScore | None] = [None] * beat.n_leads
        paths: list[WarpingPath | None] = [None] * beat.n_leads
        for lead in leads:
            scores[lead], paths[lead] = self._compare(beat.leads[lead], tmpl.leads[lead])
        return scores, paths

    # -- creation and update -------------------------------------------------

    def register_new_cluster(self, beat: BeatRepresentation, winner: int | None) -> int:
        cid = self.next_id
        self.next_id += 1
        leads = [characterize_lead(lead.q.copy(), self.params) for lead in beat.leads]
        self.clusters[cid] = ClusterTemplate(cid, leads, beat.index, beat.index, 1, [beat.index])
        if winner is not None:
            self.closest[cid] = self.resolve(winner)
        self.context.append(cid)
        return cid

    def assign(self, beat_index: int, cid: int) -> None:
        c = self.clusters[cid]
        c.beat_count += 1
        c.members.append(beat_index)
        c.last_assigned = beat_index
        self.context.append(cid)

    def update_template(
        self, cid: int, beat: BeatRepresentation, paths: Sequence[WarpingPath | None], leads: Sequence[int]
    ) -> None:
        """Blend the beat into the template of ``cid`` on ``leads``.

        ``paths[lead]`` must align the beat (``x``) with the template (``y``).
        """
        c = self.clusters[cid]
        for lead in leads:
            q = blend_template(c.leads[lead].q, beat.leads[lead].q, paths[lead], self.config.beta_update)
            c.leads[lead] = characterize_lead(q, self.params)

    # -- merging -------------------------------------------------------------

    def templates_similar(self, a: int, b: int) -> bool:
        """Merge condition: normalized similarity above gamma' in every lead."""
        young, old = sorted((a, b), key=lambda c: self.clusters[c].created_at, reverse=True)
        ta, tb = self.clusters[young], self.clusters[old]
        return all(
            self._compare(la, lb)[0].s_norm > self.config.gamma_prime for la, lb in zip(ta.leads, tb.leads)
        )

    def _absorb(self, young: int, old: int) -> tuple[MergeRecord, list[int]]:
        ty, to = self.clusters[young], self.clusters[old]
        cfg = self.config
        for lead, (ly, lo) in enumerate(zip(ty.leads, to.leads)):
            path = ddtw_path(ly.q, lo.q, cfg.delta_band_samples, cfg.lambda_slope)
            to.leads[lead] = characterize_lead(blend_template(lo.q, ly.q, path, cfg.beta_update), self.params)
        to.members.extend(ty.members)
        to.members.sort()
        to.beat_count += ty.beat_count
        to.last_assigned = max(to.last_assigned, ty.last_assigned)
        del self.clusters[young]
        self.forward[young] = old
        self.closest.pop(young, None)
        modified = []
        for c, target in list(self.closest.items()):
            if target == young:
                if c == old:
                    del self.closest[c]
                else:
                    self.closest[c] = old
                    modified.append(c)
        return MergeRecord(young, old, list(ty.members)), sorted(modified)

    def merge(self, a: int, b: int) -> list[MergeRecord]:
        """Merge ``a`` and ``b`` (the younger into the older) and cascade.

        After each merge, every cluster whose closest pair was rewritten is
        checked against the survivor, then the survivor against its own
        closest cluster.
        """
        records = []
        work: deque[tuple[int, int, bool]] = deque([(a, b, False)])
        while work:
            x, y, check = work.popleft()
            x, y = self.resolve(x), self.resolve(y)
            if x == y or x not in self.clusters or y not in self.clusters:
                continue
            if check and not self.templates_similar(x, y):
                continue
            young, old = sorted((x, y), key=lambda c: self.clusters[c].created_at, reverse=True)
            record, modified = self._absorb(young, old)
            records.append(record)
            work.extend((c, old, True) for c in modified)
            if old in self.closest:
                work.append((old, self.closest[old], True))
        return records

    def post_assignment_checks(self, outcome: SelectionOutcome) -> list[MergeRecord]:
        """Refresh the closest relation and merge clusters that became alike.

        Runs after the winner's template has been updated with the beat.
        """
        win = outcome.cluster
        records: list[MergeRecord] = []
        if len(outcome.qualifying) > 1:
            others = [c for c in outcome.searched if c != win]

            def mean_s(c: int) -> float:
                vals = [s.s for s in outcome.scores[c] if s is not None]
                return sum(vals) / len(vals) if vals else -np.inf

            s = max(others, key=lambda c: (mean_s(c), -c))
            win_r, s_r = self.resolve(win), self.resolve(s)
            if win_r != s_r and win_r in self.clusters and s_r in self.clusters:
                young, old = sorted((win_r, s_r), key=lambda c: self.clusters[c].created_at, reverse=True)
                self.closest[young] = old
                if self.templates_similar(win_r, s_r):
                    records += self.merge(win_r, s_r)
        win_r = self.resolve(win)
        c = self.clusters.get(win_r)
        if c is not None and c.beat_count < self.config.mu_transient and win_r in self.closest:
            if self.templates_similar(win_r, self.closest[win_r]):
                records += self.merge(win_r, self.closest[win_r])
        return records

    # -- deletion (noise review) ---------------------------------------------

    def delete(self, cid: int) -> tuple[int, list[int]]:
        """Dissolve ``cid`` into its closest cluster without touching templates.

        Returns the receiving cluster and the beats moved.
        """
        target = self.resolve(self.closest[cid])
        c, t = self.clusters.pop(cid), self.clusters[target]
        t.members.extend(c.members)
        t.members.sort()
        t.beat_count += c.beat_count
        self.forward[cid] = target
        self.closest.pop(cid)
        for other, ref in list(self.closest.items()):
            if ref == cid:
                if other == target:
                    del self.closest[other]
                else:
                    self.closest[other] = target
        return target, list(c.members)

    # -- export ---------------------------------------------------------------

    def snapshot_csv(self) -> str:
        """One line per live cluster: id, beat count, then every lead's template."""
        if not self.clusters:
            return "cluster,beat_count\n"
        first = next(iter(self.clusters.values()))
        cols = [f"lead{l}_{i}" for l in range(len(first.leads)) for i in range(first.width)]
        lines = [",".join(["cluster", "beat_count", *cols])]
        for cid in sorted(self.clusters):
            c = self.clusters[cid]
            values = np.concatenate([lead.q for lead in c.leads])
            lines.append(",".join([str(cid), str(c.beat_count), *(f"{v:.6g}" for v in values)]))
        return "\n".join(lines) + "\n"


def _vote(
    candidates: Sequence[int],
    scores: dict[int, list[MatchScore | None]],
    leads: Sequence[int],
    noisy: Sequence[bool],
) -> tuple[int, list[int | None]]:
    """Per-lead argmax, then majority; ties by summed normalized score, then id."""
    votes: list[int | None] = [None] * len(noisy)
    for lead in leads:
        votes[lead] = max(candidates, key=lambda c: (scores[c][lead].score(noisy[lead]), -c))
    counts = Counter(v for v in votes if v is not None)
    top = max(counts.values())
    tied = [c for c, k in counts.items() if k == top]
    if len(tied) == 1:
        return tied[0], votes

    def summed(c: int) -> float:
        return sum(scores[c][lead].normalized(noisy[lead]) for lead in leads)

    return max(tied, key=lambda c: (summed(c), -c)), votes


def _passes(scores: list[MatchScore | None], leads: Sequence[int], noisy: Sequence[bool], gamma: float) -> bool:
    return all(scores[lead].normalized(noisy[lead]) > gamma for lead in leads)


def select_cluster(
    beat: BeatRepresentation,
    cset: ClusterSet,
    noisy: Sequence[bool] | None = None,
    active: Sequence[bool] | None = None,
) -> SelectionOutcome:
    """Find the cluster for ``beat``: context clusters first, then the rest.

    ``noisy[l]`` switches lead ``l`` to the piecewise score that ignores the
    beat's own points; leads with ``active[l]`` false take no part.  With no
    active lead the beat has failed: all leads vote in that relaxed mode and
    the result is never a creation.
    """
    n_leads = beat.n_leads
    noisy = list(noisy) if noisy is not None else [False] * n_leads
    active = list(active) if active is not None else [True] * n_leads
    failed = not any(active)
    leads = list(range(n_leads)) if failed else [l for l in range(n_leads) if active[l]]
    if failed:
        # the beat's own points are noise: only look for the templates' waves in it
        noisy = [True] * n_leads
    gamma = cset.config.gamma

    if not cset.clusters:
        return SelectionOutcome("created", None, None)

    scores: dict[int, list[MatchScore | None]] = {}
    paths: dict[int, list[WarpingPath | None]] = {}

    def evaluate(subset: list[int]):
        for c in subset:
            scores[c], paths[c] = cset.score_beat(beat, c, leads)
        sim, votes = _vote(subset, scores, leads, noisy)
        qualifying = [c for c in subset if _passes(scores[c], leads, noisy, gamma)]
        return sim, votes, qualifying

    ctx = [c for c in cset.context_ids() if c in cset.clusters]
    rest = [c for c in sorted(cset.clusters) if c not in set(ctx)]
    candidates = []
    for subset, in_ctx in ((ctx, True), (rest, False)):
        if not subset:
            continue
        sim, votes, qualifying = evaluate(subset)
        candidates.append(sim)
        if failed or _passes(scores[sim], leads, noisy, gamma):
            return SelectionOutcome(
                "assigned", sim, sim, in_ctx, not in_ctx, votes, scores, paths, subset, qualifying
            )
    winner, votes = _vote(candidates, scores, leads, noisy)
    return SelectionOutcome("created", None, winner, False, False, votes, scores, paths, ctx + rest, [])
