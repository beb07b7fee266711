"""RR-interval model and rule-based rhythm labels.

The normal (NN) interval is tracked with exponential smoothing and a
deviation estimate.  Each beat gets one of seven labels from the current
interval, its neighbours and the label of the previous beat.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


class RhythmLabel(str, enum.Enum):
    GP = "GP"
    P = "P"
    N_MINUS = "N-"
    N = "N"
    N_PLUS = "N+"
    C = "C"
    D = "D"

    @property
    def rhythm_type(self) -> str:
        return _RHYTHM_TYPE[self]

    def __str__(self) -> str:
        return self.value


_RHYTHM_TYPE = {
    RhythmLabel.N: "normal",
    RhythmLabel.N_MINUS: "normal",
    RhythmLabel.N_PLUS: "normal",
    RhythmLabel.C: "normal",
    RhythmLabel.P: "premature",
    RhythmLabel.GP: "group-premature",
    RhythmLabel.D: "delayed",
}
RHYTHM_TYPES = ("normal", "premature", "group-premature", "delayed")


@dataclass(frozen=True)
class RhythmVector:
    rr: float
    rr_prev: float
    rr_next: float
    nn: float
    sigma: float


# Side conditions referenced by the rule table, keyed by number.
CONDITIONS: dict[int, Callable[[RhythmVector], bool]] = {
    1: lambda v: v.rr > v.rr_prev + 4 * v.sigma,
    2: lambda v: v.rr > v.rr_prev + 3 * v.sigma,
    3: lambda v: v.rr < v.rr_prev - 3 * v.sigma,
    4: lambda v: v.rr < v.rr_next - 3 * v.sigma,
    5: lambda v: v.rr_prev > v.nn + 3 * v.sigma,
    6: lambda v: v.rr_next > v.nn + 3 * v.sigma,
    7: lambda v: v.rr_next > v.nn - 3 * v.sigma,
    8: lambda v: v.rr_next < v.nn - 3 * v.sigma,
    9: lambda v: v.rr_next > v.nn - 2 * v.sigma,
    10: lambda v: v.rr_next > v.rr_prev + 4 * v.sigma,
    11: lambda v: v.rr_next > v.rr_prev + 3 * v.sigma,
    12: lambda v: v.rr_next < v.rr_prev - 3 * v.sigma,
}

BANDS = ("above_3s", "above_2s", "within_2s", "below_2s", "below_3s")

# Candidate = (label, condition) where condition is a tuple of alternatives,
# each a tuple of condition numbers that must all hold; () = unconditioned.
_L = RhythmLabel
_ = ()
RULES: dict[str, dict[RhythmLabel, list[tuple[RhythmLabel, tuple[tuple[int, ...], ...]]]]] = {
    "above_3s": {
        _L.GP: [(_L.D, ((6,),)), (_L.C, _)],
        _L.P: [(_L.D, ((2, 6),)), (_L.C, _)],
        _L.N_MINUS: [(_L.D, _)],
        _L.N: [(_L.D, ((1,), (10,))), (_L.N_PLUS, _)],
        _L.N_PLUS: [(_L.D, ((2,), (11,))), (_L.N_PLUS, _)],
        _L.C: [(_L.D, _)],
        _L.D: [(_L.D, _)],
    },
    "above_2s": {
        _L.GP: [(_L.C, _)],
        _L.P: [(_L.C, _)],
        _L.N_MINUS: [(_L.N_PLUS, _)],
        _L.N: [(_L.N_PLUS, _)],
        _L.N_PLUS: [(_L.N_PLUS, _)],
        _L.C: [(_L.D, ((5, 6),)), (_L.N_PLUS, _)],
        _L.D: [(_L.D, ((6,), (9,))), (_L.N_PLUS, _)],
    },
    "within_2s": {prev: [(_L.N, _)] for prev in RhythmLabel},
    "below_2s": {
        _L.GP: [(_L.GP, ((8,),)), (_L.N_MINUS, _)],
        _L.P: [(_L.N_MINUS, ((1,),)), (_L.GP, _)],
        _L.N_MINUS: [(_L.N_MINUS, _)],
        _L.N: [(_L.P, ((3, 4, 6),)), (_L.GP, ((3, 8),)), (_L.N_MINUS, _)],
        _L.N_PLUS: [(_L.N_MINUS, _)],
        _L.C: [(_L.P, ((6,),)), (_L.GP, ((8,),)), (_L.N_MINUS, _)],
        _L.D: [(_L.P, ((4,),)), (_L.N_MINUS, _)],
    },
    "below_3s": {
        _L.GP: [(_L.GP, _)],
        _L.P: [(_L.GP, _)],
        _L.N_MINUS: [(_L.P, ((3, 4, 7),)), (_L.GP, ((3, 12),)), (_L.N_MINUS, _)],
        _L.N: [(_L.P, ((3, 4, 7),)), (_L.GP, ((3,),)), (_L.N_MINUS, _)],
        _L.N_PLUS: [(_L.P, ((4,),)), (_L.GP, _)],
        _L.C: [(_L.P, ((4, 7),)), (_L.GP, _)],
        _L.D: [(_L.P, ((4,),)), (_L.GP, _)],
    },
}
del _L, _


def band_of(delta_rr: float, sigma: float) -> str:
    if delta_rr > 3 * sigma:
        return "above_3s"
    if delta_rr > 2 * sigma:
        return "above_2s"
    if delta_rr >= -2 * sigma:
        return "within_2s"
    if delta_rr >= -3 * sigma:
        return "below_2s"
    return "below_3s"


def select_label(
    band: str, prev_label: RhythmLabel, holds: Callable[[int], bool]
) -> RhythmLabel:
    """First candidate of the table cell whose side conditions hold."""
    for label, alternatives in RULES[band][prev_label]:
        if not alternatives or any(all(holds(c) for c in conj) for conj in alternatives):
            return label
    raise AssertionError(f"rule cell {band}/{prev_label} has no default candidate")


@dataclass
class RrModel:
    nn: float
    sigma: float
    theta: float = 0.2
    tau: int = 15
    sigma_floor: float = 1.0
    history: deque = field(default_factory=deque)

    def __post_init__(self) -> None:
        self.history = deque(self.history, maxlen=self.tau)

    @property
    def effective_sigma(self) -> float:
        return max(self.sigma, self.sigma_floor)

    def update(self, rr_prev: float, prev_label: RhythmLabel) -> None:
        """Absorb the interval of the previous beat if its rhythm was normal."""
        if prev_label.rhythm_type != "normal":
            return
        self.history.append(abs(rr_prev - self.nn))
        self.nn = self.theta * rr_prev + (1 - self.theta) * self.nn
        self.sigma = float(np.sqrt(np.mean(np.square(self.history))))

    def label(self, rr: float, rr_prev: float, rr_next: float, prev_label: RhythmLabel) -> RhythmLabel:
        return label_rhythm(RhythmVector(rr, rr_prev, rr_next, self.nn, self.effective_sigma), prev_label)


def label_rhythm(v: RhythmVector, prev_label: RhythmLabel) -> RhythmLabel:
    band = band_of(v.rr - v.nn, v.sigma)
    return select_label(band, prev_label, lambda c: CONDITIONS[c](v))


def normal_subset(tc: Sequence[float], min_run: int = 3, max_cv: float = 0.1) -> list[int]:
    """Positions in ``tc`` covered by a run of consecutive values with low spread.

    Falls back to the values within two standard deviations of the mean.
    """
    tc = np.asarray(tc, dtype=float)
    n = tc.size
    normal = np.zeros(n, dtype=bool)
    for start in range(n):
        for stop in range(start + min_run, n + 1):
            run = tc[start:stop]
            mean = run.mean()
            if mean > 0 and run.std() / mean < max_cv:
                normal[start:stop] = True
    if normal.any():
        return list(np.flatnonzero(normal))
    mean, std = tc.mean(), tc.std()
    return list(np.flatnonzero(np.abs(tc - mean) <= 2 * std))


@dataclass
class RrInit:
    model: RrModel
    offset: int  # how many beats the initial context was moved forward


def init_rr_model(
    rr: Sequence[float], tau: int = 15, theta: float = 0.2, sigma_floor: float = 1.0
) -> RrInit | None:
    """Initialize from the first ``tau`` intervals, sliding forward if needed.

    Returns ``None`` when fewer than ``tau`` intervals are available.
    """
    rr = np.asarray(rr, dtype=float)
    for offset in range(0, rr.size - tau + 1):
        tc = rr[offset:offset + tau]
        idx = normal_subset(tc)
        if idx:
            values = tc[idx]
            nn = float(values.mean())
            deviations = np.abs(values - nn)
            # seeding the history with these deviations makes the RMS estimate
            # start from the population standard deviation of the normal set
            model = RrModel(nn, float(values.std()), theta, tau, sigma_floor, deque(deviations[-tau:]))
            return RrInit(model, offset)
    return None


class RhythmLabeler:
    """Streaming labeler: feed fiducials, get labels one beat late.

    Before the model is initialized labels are held back; once the first
    complete context is available, all pending beats are labeled with the
    initial model.  A record shorter than ``tau + 1`` beats ends with every
    beat labeled N.
    """

    def __init__(self, tau: int = 15, theta: float = 0.2, sigma_floor: float = 1.0) -> None:
        self.tau = tau
        self.theta = theta
        self.sigma_floor = sigma_floor
        self.fiducials: list[int] = []
        self.labels: list[RhythmLabel] = []
        self.model: RrModel | None = None
        self._init_end = None  # beats up to this index use the frozen initial model
        self._frozen: RrModel | None = None

    def _rr(self, n: int) -> float | None:
        if n <= 0 or n >= len(self.fiducials):
            return None
        return float(self.fiducials[n] - self.fiducials[n - 1])

    def _vector_parts(self, n: int, nn: float) -> tuple[float, float, float]:
        rr = self._rr(n)
        rr_prev = self._rr(n - 1)
        rr_next = self._rr(n + 1)
        return rr, (nn if rr_prev is None else rr_prev), (nn if rr_next is None else rr_next)

    def _label_next(self, final: bool = False) -> RhythmLabel | None:
        n = len(self.labels)
        if n >= len(self.fiducials) or (not final and n + 1 >= len(self.fiducials)):
            return None
        if n == 0:
            label = RhythmLabel.N
        else:
            prev = self.labels[-1]
            if n <= self._init_end:
                model = self._frozen
            else:
                model = self.model
                if n - 1 > self._init_end:
                    model.update(self._rr(n - 1), prev)
            rr, rr_prev, rr_next = self._vector_parts(n, model.nn)
            label = model.label(rr, rr_prev, rr_next, prev)
        self.labels.append(label)
        return label

    def push(self, fiducial: int) -> list[tuple[int, RhythmLabel]]:
        """Add a beat; returns the ``(beat, label)`` pairs that became available."""
        self.fiducials.append(int(fiducial))
        if self.model is None:
            rr = np.diff(self.fiducials)
            init = init_rr_model(rr, self.tau, self.theta, self.sigma_floor) if rr.size >= self.tau else None
            if init is None:
                return []
            self.model = init.model
            self._frozen = RrModel(init.model.nn, init.model.sigma, self.theta, self.tau, self.sigma_floor)
            # intervals rr[0..tau+offset-1] end at beat tau + offset
            self._init_end = self.tau + init.offset
        out = []
        while (label := self._label_next()) is not None:
            out.append((len(self.labels) - 1, label))
        return out

    def finish(self) -> list[tuple[int, RhythmLabel]]:
        out = []
        if self.model is None:
            for n in range(len(self.labels), len(self.fiducials)):
                self.labels.append(RhythmLabel.N)
                out.append((n, RhythmLabel.N))
            return out
        while (label := self._label_next(final=True)) is not None:
            out.append((len(self.labels) - 1, label))
        return out


def label_record(fiducials: Sequence[int], tau: int = 15, theta: float = 0.2) -> list[RhythmLabel]:
    labeler = RhythmLabeler(tau, theta)
    for t in fiducials:
        labeler.push(t)
    labeler.finish()
    return labeler.labels
