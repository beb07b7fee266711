"""QRS characterization by dominant points.

A QRS window is reduced to its dominant points (curvature maxima with a
minimal deflection) and, among them, the relevant points: waves taller than
``rho_qrs`` together with a support region spanning the whole wave.

Angles are measured in a plane where one sample at 360 Hz counts as 100 uV
(scaled with the sampling rate, so a given duration always maps to the same
length).  All indices are 0-based window positions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from .config import RunConfig
from .preprocess import QrsWindow, ms_to_samples

UV_PER_SAMPLE_AT_360HZ = 100.0
_TIE_TOL = 1e-12


@dataclass(frozen=True)
class WaveParams:
    theta: int  # max wave half-width, samples
    rho_min: float
    rho_qrs: float
    uv_per_sample: float

    @classmethod
    def from_config(cls, config: RunConfig, fs: float) -> "WaveParams":
        return cls(
            theta=max(1, ms_to_samples(config.theta_wave_ms, fs)),
            rho_min=config.rho_min_uv,
            rho_qrs=config.rho_qrs_uv,
            uv_per_sample=UV_PER_SAMPLE_AT_360HZ * 360.0 / fs,
        )


@dataclass(frozen=True)
class RelevantPoint:
    index: int
    amplitude: float
    lo: int  # support region [lo, hi]
    hi: int
    concave: bool  # peak above both support ends
    height: float  # wave height, min distance to the support ends

    @property
    def polarity(self) -> str:
        return "concave" if self.concave else "convex"


@dataclass
class CurvatureMap:
    """Curvature and dominance region of every window position."""

    curvature: np.ndarray  # -1 where undefined (window ends)
    r_minus: np.ndarray
    r_plus: np.ndarray
    deflection: np.ndarray  # min(|q_j - q_r-|, |q_j - q_r+|)
    left_extent: np.ndarray  # furthest offset inside I_j^-
    right_extent: np.ndarray


@dataclass
class LeadShape:
    q: np.ndarray
    dominant: np.ndarray
    relevant: list[RelevantPoint]
    deflection: np.ndarray = field(repr=False)

    @property
    def waveless(self) -> bool:
        return self.dominant.size == 0

    @property
    def n_dominant(self) -> int:
        return int(self.dominant.size)

    @property
    def n_relevant(self) -> int:
        return len(self.relevant)


@dataclass
class BeatRepresentation:
    index: int
    fiducial: int
    leads: list[LeadShape]

    @property
    def n_leads(self) -> int:
        return len(self.leads)


def _side(q: np.ndarray, theta: int, rho_min: float, sign: int):
    """Membership of j + sign*d (d = 1..theta) in I_j^-/I_j^+, plus signed rises."""
    w = q.size
    offsets = np.arange(1, theta + 1)
    idx = np.arange(w)[:, None] + sign * offsets[None, :]
    inside = (idx >= 0) & (idx < w)
    rise = q[np.clip(idx, 0, w - 1)] - q[:, None]
    dq = np.abs(rise)
    # largest deflection strictly between j and each candidate a
    before = np.maximum.accumulate(dq, axis=1)
    before = np.concatenate([np.full((w, 1), -np.inf), before[:, :-1]], axis=1)
    ok = (before - dq) < rho_min
    # a point belongs to the interval when every point between it and j is ok
    all_ok = np.logical_and.accumulate(ok, axis=1)
    member = np.concatenate([np.ones((w, 1), dtype=bool), all_ok[:, :-1]], axis=1) & inside
    return member, rise


@numba.njit(cache=True)
def _best_corners(left, right, left_rise, right_rise, scale):
    """Sharpest corner per position and the widest arm pair reaching it."""
    w, theta = left.shape
    best = np.full(w, -np.inf)
    d_best = np.zeros(w, dtype=np.int64)
    e_best = np.zeros(w, dtype=np.int64)
    cos = np.empty((theta, theta))
    for j in range(w):
        top = -np.inf
        for a in range(theta):
            if not left[j, a]:
                continue
            ux = -(a + 1) * scale
            uy = left_rise[j, a]
            nu = np.sqrt(ux * ux + uy * uy)
            for b in range(theta):
                if not right[j, b]:
                    continue
                vx = (b + 1) * scale
                vy = right_rise[j, b]
                c = (ux * vx + uy * vy) / (nu * np.sqrt(vx * vx + vy * vy))
                cos[a, b] = c
                if c > top:
                    top = c
        if top == -np.inf:
            continue
        best[j] = top
        # among equally sharp corners take the widest one: furthest left and right arms
        for a in range(theta):
            if not left[j, a]:
                continue
            for b in range(theta):
                if right[j, b] and cos[a, b] >= top - _TIE_TOL:
                    if a + 1 > d_best[j]:
                        d_best[j] = a + 1
                    if b + 1 > e_best[j]:
                        e_best[j] = b + 1
    return best, d_best, e_best


def curvature_map(q: np.ndarray, params: WaveParams) -> CurvatureMap:
    q = np.asarray(q, dtype=float)
    w = q.size
    left, left_rise = _side(q, params.theta, params.rho_min, -1)
    right, right_rise = _side(q, params.theta, params.rho_min, +1)
    best, d_best, e_best = _best_corners(left, right, left_rise, right_rise, float(params.uv_per_sample))

    defined = np.isfinite(best)
    defined[[0, -1] if w else []] = False
    curvature = np.where(defined, best, -1.0)
    j = np.arange(w)
    r_minus = np.where(defined, j - d_best, j)
    r_plus = np.where(defined, j + e_best, j)
    deflection = np.minimum(np.abs(q - q[r_minus]), np.abs(q - q[r_plus]))
    deflection = np.where(defined, deflection, 0.0)
    return CurvatureMap(curvature, r_minus, r_plus, deflection, left.sum(axis=1), right.sum(axis=1))


def curvature_at(q: np.ndarray, j: int, params: WaveParams) -> tuple[float, int, int]:
    """Curvature at window position ``j`` and its dominance region ``(r-, r+)``.

    Defined for ``1 <= j <= w - 2``; raises ``IndexError`` otherwise.
    """
    q = np.asarray(q, dtype=float)
    if not 1 <= j <= q.size - 2:
        raise IndexError(f"curvature undefined at {j} for a window of {q.size}")
    cmap = curvature_map(q, params)
    return float(cmap.curvature[j]), int(cmap.r_minus[j]), int(cmap.r_plus[j])


def dominant_points(q: np.ndarray, params: WaveParams, cmap: CurvatureMap | None = None) -> np.ndarray:
    """Positions that maximize curvature inside their own dominance region.

    The region ends are excluded from the comparison: on a straight edge they
    sit on the neighbouring corner, which would otherwise always suppress the
    smaller of two adjacent waves.
    """
    if cmap is None:
        cmap = curvature_map(q, params)
    k = cmap.curvature
    found = []
    for j in np.flatnonzero(cmap.deflection > params.rho_min):
        lo, hi = cmap.r_minus[j] + 1, cmap.r_plus[j]
        # np.argmax keeps the first maximum: ties go to the smaller index
        if lo + int(np.argmax(k[lo:hi])) == j:
            found.append(j)
    return np.asarray(found, dtype=int)


def _support(q: np.ndarray, j: int, cmap: CurvatureMap) -> tuple[int, int]:
    dev = np.abs(q - q[j])
    lo, hi = int(cmap.r_minus[j]), int(cmap.r_plus[j])
    lo_limit = j - int(cmap.left_extent[j])
    hi_limit = j + int(cmap.right_extent[j])
    if lo < j and dev[lo] > dev[lo + 1]:
        while lo - 1 >= lo_limit and dev[lo - 1] > dev[lo]:
            lo -= 1
    if hi > j and dev[hi] > dev[hi - 1]:
        while hi + 1 <= hi_limit and dev[hi + 1] > dev[hi]:
            hi += 1
    return lo, hi


def relevant_points(
    q: np.ndarray, dominant: np.ndarray, params: WaveParams, cmap: CurvatureMap | None = None
) -> list[RelevantPoint]:
    q = np.asarray(q, dtype=float)
    if cmap is None:
        cmap = curvature_map(q, params)
    if dominant.size == 0:
        return []
    heights = cmap.deflection[dominant]
    keep = dominant[heights > params.rho_qrs]
    if keep.size == 0:
        keep = dominant[[int(np.argmax(heights))]]
    points = []
    for j in keep:
        j = int(j)
        lo, hi = _support(q, j, cmap)
        concave = bool(q[j] > q[lo] and q[j] > q[hi])
        height = float(min(abs(q[j] - q[lo]), abs(q[j] - q[hi])))
        points.append(RelevantPoint(j, float(q[j]), lo, hi, concave, height))
    return points


def characterize_lead(q: np.ndarray, params: WaveParams) -> LeadShape:
    q = np.asarray(q, dtype=float)
    cmap = curvature_map(q, params)
    dominant = dominant_points(q, params, cmap)
    return LeadShape(q, dominant, relevant_points(q, dominant, params, cmap), cmap.deflection)


def characterize_beat(
    windows: list[QrsWindow], params: WaveParams, index: int = 0, fiducial: int = 0
) -> BeatRepresentation:
    if not windows:
        raise ValueError("a beat needs at least one lead")
    ordered = sorted(windows, key=lambda win: win.lead_index)
    return BeatRepresentation(index, fiducial, [characterize_lead(win.samples, params) for win in ordered])
