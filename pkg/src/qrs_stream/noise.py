"""Noise handling: wave counting per beat and context review of new clusters.

A lead is *noisy* on a beat when its window holds more dominant points than
a QRS can plausibly have.  Noisy beats open a per-lead noisy interval during
which the lead is matched with the piecewise score that ignores the beat's
own points; the interval closes just before ``kappa`` consecutive noise-free
beats.

Every cluster creation opens a review over the next ``tau`` beats.  When the
window is complete, creations that look like noisy versions of an earlier
morphology are undone: the cluster is deleted and its beats handed to its
closest cluster.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .characterize import BeatRepresentation
from .match import MatchScore


@dataclass(frozen=True)
class BeatNoise:
    noisy: tuple[bool, ...]  # more dominant points than eta
    distorted: tuple[bool, ...]  # more relevant points than eta

    @property
    def failed(self) -> bool:
        return all(self.distorted)

    @property
    def active(self) -> tuple[bool, ...]:
        return tuple(not d for d in self.distorted)


def beat_noise_check(beat: BeatRepresentation, eta: int = 6) -> BeatNoise:
    return BeatNoise(
        tuple(lead.n_dominant > eta for lead in beat.leads),
        tuple(lead.n_relevant > eta for lead in beat.leads),
    )


def assignment_condition(score: MatchScore, noisy_lead: bool, gamma: float = 0.30) -> bool:
    """Per-lead assignment test; relaxed to the template-side score in a noisy interval."""
    return score.normalized(noisy_lead) > gamma


@dataclass(frozen=True)
class LeadState:
    in_interval: bool = False
    clean_run: int = 0  # consecutive noise-free beats


def step_lead_state(state: LeadState, noisy: bool, noise_free: bool) -> LeadState:
    """Advance one lead by one beat."""
    if noisy:
        return LeadState(True, 0)
    if not noise_free:
        return LeadState(state.in_interval, 0)
    return LeadState(state.in_interval, state.clean_run + 1)


def noise_intervals(
    beat_noise: Sequence[bool], noise_free: Sequence[bool], kappa: int = 3, initial: LeadState = LeadState()
) -> tuple[list[bool], list[LeadState]]:
    """Per-beat noisy-interval membership of one lead, plus the state after each beat.

    An interval opens at a noisy beat and ends just before the first run of
    ``kappa`` consecutive noise-free beats.  Runs that started before the
    first beat (``initial.clean_run``) are only cleared inside the returned list.
    """
    inside: list[bool] = []
    states: list[LeadState] = []
    state = initial
    for noisy, free in zip(beat_noise, noise_free):
        state = step_lead_state(state, noisy, free)
        if state.clean_run >= kappa:
            state = LeadState(False, state.clean_run)
            inside.append(False)
            for k in range(1, min(kappa, len(inside))):
                inside[-1 - k] = False
        else:
            inside.append(noisy or state.in_interval)
        states.append(state)
    return inside, states


@dataclass
class Creation:
    """A beat that created a cluster, as seen by the review."""

    beat: int
    cluster: int
    noise_leads: frozenset[int]  # leads whose similarity with the winner failed
    resembles_winner: bool  # relaxed test would have assigned it in every lead
    has_closest: bool


@dataclass
class ReviewResult:
    trigger: int
    stop: int  # last beat covered
    hypothesis: np.ndarray  # (beats, leads) bool
    proliferation: bool
    common_leads: frozenset[int]
    deleted: list[Creation] = field(default_factory=list)


class NoiseTracker:
    """Per-lead noise state and pending review windows of one record."""

    def __init__(self, n_leads: int, tau: int = 15, kappa: int = 3, eta: int = 6) -> None:
        self.n_leads = n_leads
        self.tau = tau
        self.kappa = kappa
        self.eta = eta
        self.beat_noise: list[list[bool]] = []
        self.noise_free: list[list[bool]] = []
        self.lead_noise: list[list[bool]] = []
        self.states: list[list[LeadState]] = []
        self.creations: dict[int, Creation] = {}
        self.pending: list[int] = []  # triggers of open review windows

    def __len__(self) -> int:
        return len(self.beat_noise)

    def _state_before(self, n: int) -> list[LeadState]:
        return self.states[n - 1] if n > 0 else [LeadState()] * self.n_leads

    def lead_noise_before(self, n: int) -> list[bool]:
        return list(self.lead_noise[n - 1]) if n > 0 else [False] * self.n_leads

    def selection_noisy(self, flags: BeatNoise) -> list[bool]:
        """Leads scored in noisy-interval mode for the next beat."""
        state = self._state_before(len(self))
        return [flags.noisy[l] or state[l].in_interval for l in range(self.n_leads)]

    def record(self, flags: BeatNoise, noise_free: Sequence[bool], creation: Creation | None = None) -> int:
        n = len(self)
        self.beat_noise.append(list(flags.noisy))
        self.noise_free.append([bool(f) and not flags.noisy[l] for l, f in enumerate(noise_free)])
        self.lead_noise.append([False] * self.n_leads)
        self.states.append([LeadState() for _ in range(self.n_leads)])
        self._recompute(n)
        if creation is not None:
            self.creations[n] = creation
            self.pending.append(n)
        return n

    def _recompute(self, start: int) -> None:
        """Rebuild interval flags and states from ``start`` to the head."""
        before = self._state_before(start)
        for l in range(self.n_leads):
            noisy = [b[l] for b in self.beat_noise[start:]]
            free = [f[l] for f in self.noise_free[start:]]
            inside, states = noise_intervals(noisy, free, self.kappa, before[l])
            for k, (flag, st) in enumerate(zip(inside, states)):
                self.lead_noise[start + k][l] = flag
                self.states[start + k][l] = st
                if st.clean_run >= self.kappa:
                    # the run may reach back before ``start``
                    for i in range(max(0, start + k - self.kappa + 1), start):
                        self.lead_noise[i][l] = False

    def due(self, head: int) -> list[int]:
        return [m for m in self.pending if m + self.tau - 1 <= head]

    def review(self, trigger: int, alive: Callable[[int], bool]) -> ReviewResult:
        """Evaluate the noise hypothesis over the window opened at ``trigger``.

        ``alive(cluster)`` tells whether a created cluster still exists on its
        own; creations already merged or deleted are left alone.
        """
        self.pending.remove(trigger)
        stop = min(trigger + self.tau - 1, len(self) - 1)
        beats = range(trigger, stop + 1)
        hyp = np.zeros((len(beats), self.n_leads), dtype=bool)
        prev = np.asarray(self.lead_noise_before(trigger), dtype=bool)
        for k, i in enumerate(beats):
            h = prev | np.asarray(self.beat_noise[i], dtype=bool)
            c = self.creations.get(i)
            if c is not None and c.resembles_winner:
                h[list(c.noise_leads)] = True
            hyp[k] = h
            for l in range(self.n_leads):
                if self.states[i][l].clean_run >= self.kappa:
                    hyp[max(0, k - self.kappa + 1):k + 1, l] = False
            prev = hyp[k]

        created = [self.creations[i] for i in beats if i in self.creations and alive(self.creations[i].cluster)]
        proliferation = len(created) > self.tau / 3
        common: frozenset[int] = frozenset()
        if proliferation:
            common = frozenset.intersection(*(c.noise_leads for c in created))
            if common:
                hyp[:, sorted(common)] = True

        result = ReviewResult(trigger, stop, hyp, proliferation, common)
        for c in created:
            if c.noise_leads and c.has_closest and all(hyp[c.beat - trigger, l] for l in c.noise_leads):
                result.deleted.append(c)
        return result

    def apply(self, result: ReviewResult) -> None:
        """Record the outcome of a review and refresh the intervals it touches."""
        deleted = {c.beat for c in result.deleted}
        for c in result.deleted:
            for l in c.noise_leads:
                self.beat_noise[c.beat][l] = True
                self.noise_free[c.beat][l] = False
            if c.beat in self.pending:
                self.pending.remove(c.beat)
        if deleted:
            self._recompute(min(deleted))

    def cancel(self, trigger: int) -> None:
        """Drop the window of a creation whose cluster no longer exists."""
        if trigger in self.pending:
            self.pending.remove(trigger)
