"""Baseline-wander removal and QRS window extraction."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import median_filter as _nd_median

from .io import EcgRecord

BASELINE_WIDTHS_MS = (200.0, 600.0)
#: Delay introduced by the cascaded median filters (half of 200 ms + half of 600 ms).
BASELINE_LATENCY_MS = 400.0


class BoundarySkip(ValueError):
    """The QRS window of a beat does not fit inside the record."""

    def __init__(self, t: int, start: int, stop: int, length: int) -> None:
        super().__init__(f"window [{start}, {stop}) of beat at {t} overruns record of {length}")
        self.t = t


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def ms_to_samples(ms: float, fs: float) -> int:
    return round_half_up(ms * fs / 1000.0)


def odd_width(ms: float, fs: float) -> int:
    width = max(1, ms_to_samples(ms, fs))
    return width + 1 if width % 2 == 0 else width


def running_median(x: np.ndarray, width: int) -> np.ndarray:
    """Centered running median of odd ``width``.

    Near the edges the window shrinks symmetrically to the samples available,
    so ``y[0] == x[0]`` and the output keeps the input length.
    """
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise ValueError("median filter of an empty sequence")
    if width < 1 or width % 2 == 0:
        raise ValueError(f"median width must be a positive odd integer, got {width}")
    half = width // 2
    n = x.size
    if n <= 2 * half:
        half = (n - 1) // 2
    y = _nd_median(x, size=2 * half + 1, mode="nearest") if half else x.copy()
    for i in range(min(half, n)):
        y[i] = np.median(x[: 2 * i + 1])
        j = n - 1 - i
        y[j] = np.median(x[j - i:])
    return y


def median_filter(x: np.ndarray, width_ms: float, fs: float) -> np.ndarray:
    return running_median(x, odd_width(width_ms, fs))


def estimate_baseline(x: np.ndarray, fs: float) -> np.ndarray:
    first, second = BASELINE_WIDTHS_MS
    return median_filter(median_filter(x, first, fs), second, fs)


def remove_baseline(record: EcgRecord) -> EcgRecord:
    fs = record.sampling_rate_hz
    filtered = np.vstack([lead - estimate_baseline(lead, fs) for lead in record.samples])
    return EcgRecord(fs, list(record.lead_names), filtered)


class StreamingBaseline:
    """Sample-by-sample baseline removal for one lead.

    Emits ``x[i] - baseline[i]`` once the samples needed by both median
    stages have arrived, i.e. with a lag of ``latency`` samples (400 ms).
    The output sequence is identical to :func:`remove_baseline` on the
    whole signal, including the shrinking-window edges (handled on
    :meth:`flush`).
    """

    def __init__(self, fs: float) -> None:
        self.h1 = odd_width(BASELINE_WIDTHS_MS[0], fs) // 2
        self.h2 = odd_width(BASELINE_WIDTHS_MS[1], fs) // 2
        self.latency = self.h1 + self.h2
        self._x: deque[float] = deque()  # raw samples, from index _x0
        self._m: deque[float] = deque()  # first-stage medians, from index _m0
        self._x0 = 0
        self._m0 = 0
        self._n_in = 0
        self._n_m = 0  # first-stage medians computed
        self._n_out = 0

    def _x_at(self, i: int) -> float:
        return self._x[i - self._x0]

    def _first_stage(self, i: int, n_total: int | None) -> float:
        half = self.h1 if n_total is None else min(self.h1, i, n_total - 1 - i)
        half = min(half, i)
        return float(np.median([self._x_at(k) for k in range(i - half, i + half + 1)]))

    def _second_stage(self, i: int, n_total: int | None) -> float:
        half = self.h2 if n_total is None else min(self.h2, i, n_total - 1 - i)
        half = min(half, i)
        return float(np.median([self._m[k - self._m0] for k in range(i - half, i + half + 1)]))

    def _trim(self) -> None:
        keep_m = self._n_out - self.h2
        while self._m and self._m0 < keep_m:
            self._m.popleft()
            self._m0 += 1
        keep_x = min(self._n_out, self._n_m - self.h1)
        while self._x and self._x0 < keep_x:
            self._x.popleft()
            self._x0 += 1

    def push(self, value: float) -> list[float]:
        self._x.append(float(value))
        self._n_in += 1
        out = []
        # first stage at i needs x[i + h1] (window shrinks only at the start)
        while self._n_m + self.h1 < self._n_in:
            self._m.append(self._first_stage(self._n_m, None))
            self._n_m += 1
        while self._n_out + self.h2 < self._n_m:
            i = self._n_out
            out.append(self._x_at(i) - self._second_stage(i, None))
            self._n_out += 1
        self._trim()
        return out

    def flush(self) -> list[float]:
        n = self._n_in
        while self._n_m < n:
            self._m.append(self._first_stage(self._n_m, n))
            self._n_m += 1
        out = []
        while self._n_out < n:
            i = self._n_out
            out.append(self._x_at(i) - self._second_stage(i, n))
            self._n_out += 1
        return out


@dataclass
class QrsWindow:
    lead_index: int
    samples: np.ndarray  # length w = w_minus + w_plus
    fiducial_offset: int  # 0-based position of the fiducial sample


def window_bounds(fs: float) -> tuple[int, int]:
    """(w_minus, w_plus): 100 ms before and 200 ms after the fiducial, rounded up."""
    # round first so that e.g. 0.1 * 360 does not ceil to 37 through float noise
    return math.ceil(round(0.1 * fs, 9)), math.ceil(round(0.2 * fs, 9))


def extract_window(record: EcgRecord, t: int) -> list[QrsWindow]:
    w_minus, w_plus = window_bounds(record.sampling_rate_hz)
    start, stop = t - w_minus, t + w_plus
    if start < 0 or stop > len(record):
        raise BoundarySkip(t, start, stop, len(record))
    return [
        QrsWindow(lead, record.samples[lead, start:stop].copy(), w_minus)
        for lead in range(record.n_leads)
    ]
