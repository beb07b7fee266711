"""Synthetic multilead ECG streams with known beat classes.

Beats are drawn as smoothed polygons (straight wave edges with rounded
corners), which is close to what real QRS complexes look like at the scale
of the curvature analysis.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import gaussian_filter1d

from .io import BeatAnnotation, EcgRecord

# (time offset in ms from the fiducial, amplitude in uV) per lead
NORMAL_SHAPE = (
    ((-40, 0), (-22, -90), (0, 1000), (24, -380), (44, 0), (200, 0), (280, 280), (360, 0)),
    ((-40, 0), (-20, -60), (0, 620), (22, -300), (40, 0), (200, 0), (280, 180), (360, 0)),
)
VENTRICULAR_SHAPE = (
    ((-45, 0), (35, -1500), (110, 0), (200, 0), (290, 450), (380, 0)),
    ((-20, 0), (35, 1200), (100, -250), (140, 0), (200, 0), (290, -250), (380, 0)),
)


def draw_beat(shape, fs: float, smooth_ms: float = 4.0) -> tuple[np.ndarray, int]:
    """Sample a polygon shape; returns ``(samples, fiducial offset)``."""
    times = np.array([p[0] for p in shape], dtype=float)
    amps = np.array([p[1] for p in shape], dtype=float)
    start = int(np.floor(times[0] * fs / 1000.0)) - 5
    stop = int(np.ceil(times[-1] * fs / 1000.0)) + 5
    t = np.arange(start, stop + 1) * 1000.0 / fs
    y = np.interp(t, times, amps)
    y = gaussian_filter1d(y, smooth_ms * fs / 1000.0)
    return y, -start


@dataclass
class SyntheticStream:
    record: EcgRecord
    annotations: list[BeatAnnotation]
    classes: list[str]  # ground truth per beat
    artifact_beats: list[int] = field(default_factory=list)
    burst_beats: list[int] = field(default_factory=list)
    burst_lead: int | None = None


def bigeminy_stream(
    n_beats: int = 500,
    fs: float = 360.0,
    rr_samples: int = 270,
    artifact_beats: tuple[int, ...] = (),
    burst_start: int | None = None,
    burst_length: int = 10,
    burst_lead: int = 1,
    artifact_uv: float = 450.0,
    dropout_beats: tuple[int, ...] = (),
    dropout_lead: int = 1,
    seed: int = 0,
) -> SyntheticStream:
    """Alternating normal / ventricular beats on two leads.

    ``artifact_beats`` get a high-frequency burst over their QRS on every
    lead; on ``dropout_beats`` the QRS of ``dropout_lead`` is replaced by a
    flat line with mains pick-up; ``burst_start`` starts ``burst_length`` consecutive beats with
    high-frequency noise on ``burst_lead`` only.  Beat classes are ``N``
    and ``V`` regardless of the injected noise.
    """
    rng = np.random.default_rng(seed)
    margin = int(fs)
    n = margin * 2 + rr_samples * n_beats
    signal = np.zeros((2, n))
    fiducials = margin + rr_samples * np.arange(n_beats) + rng.integers(-2, 3, size=n_beats)
    classes = ["N" if k % 2 == 0 else "V" for k in range(n_beats)]
    shapes = {"N": NORMAL_SHAPE, "V": VENTRICULAR_SHAPE}
    for t, cls in zip(fiducials, classes):
        gain = 1.0 + 0.03 * rng.standard_normal()
        for lead in range(2):
            y, off = draw_beat(shapes[cls][lead], fs)
            signal[lead, t - off:t - off + y.size] += gain * y

    time = np.arange(n) / fs
    signal += 120.0 * np.sin(2 * np.pi * 0.25 * time) + 40.0 * np.sin(2 * np.pi * 0.07 * time + 1.0)
    signal += 5.0 * rng.standard_normal(signal.shape)

    half = int(0.1 * fs)
    for k in artifact_beats:
        t = fiducials[k]
        seg = np.arange(t - half, t + 2 * half)
        for lead in range(2):
            signal[lead, seg] += artifact_uv * np.sin(2 * np.pi * 45.0 * seg / fs + lead)
    for k in dropout_beats:
        # the lead loses contact around the QRS: flat line plus pick-up noise
        t = fiducials[k]
        seg = np.arange(t - 2 * half, t + 3 * half)
        signal[dropout_lead, seg] = signal[dropout_lead, seg[0]]
        signal[dropout_lead, seg] += 60.0 * np.sin(2 * np.pi * 50.0 * seg / fs)
    burst = []
    if burst_start is not None:
        burst = list(range(burst_start, burst_start + burst_length))
        lo = fiducials[burst[0]] - rr_samples // 2
        hi = fiducials[burst[-1]] + rr_samples // 2
        seg = np.arange(lo, hi)
        signal[burst_lead, seg] += 400.0 * np.sin(2 * np.pi * 40.0 * seg / fs) + 80.0 * rng.standard_normal(seg.size)

    record = EcgRecord(fs, ["I", "II"], signal)
    annotations = [BeatAnnotation(int(t), c) for t, c in zip(fiducials, classes)]
    return SyntheticStream(record, annotations, classes, sorted([*artifact_beats, *dropout_beats]), burst,
                           burst_lead if burst_start is not None else None)
