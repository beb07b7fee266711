"""Similarity between a beat and a cluster template, lead by lead.

For every relevant point of a reference signal the warping path locates the
aligned stretch of the other signal.  The other signal *concords* there when
it holds a wave taller than ``rho_min``; concordant points contribute their
height ratio damped by a sigmoid of the local area dissimilarity, while the
worst non-concordant point is subtracted as a penalty.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .align import WarpingPath, ddtw_path, map_interval, reconstruct_aligned
from .characterize import LeadShape, RelevantPoint

#: Dissimilarity assigned when the beat has no area around a point.
SENTINEL_DISSIMILARITY = 10.0
_AREA_EPS = 1e-9


def sig(x, alpha: float = 4.0):
    """Bounded contribution ``1 - a x / sqrt(1 + (a x)^2)``; sig(0) = 1."""
    ax = alpha * np.asarray(x, dtype=float)
    out = 1.0 - ax / np.sqrt(1.0 + ax * ax)
    return float(out) if out.ndim == 0 else out


def concordance_ratio(other_q: np.ndarray, point: RelevantPoint, lo: int, hi: int, rho_min: float) -> float:
    """Height ratio of the wave found in ``other_q[lo:hi+1]``, 0 if none.

    The searched wave has the polarity of ``point``: a trough for a convex
    point, a peak for a concave one.
    """
    if hi <= lo:
        return 0.0
    seg = np.asarray(other_q[lo:hi + 1], dtype=float)
    if point.concave:
        peak = int(np.argmax(seg))
        side_lo, side_hi = seg[:peak + 1].min(), seg[peak:].min()
    else:
        peak = int(np.argmin(seg))
        side_lo, side_hi = seg[:peak + 1].max(), seg[peak:].max()
    height = min(abs(seg[peak] - side_lo), abs(seg[peak] - side_hi))
    if height <= rho_min:
        return 0.0
    return float(min(point.height, height) / max(point.height, height))


def _trapezoid(values: np.ndarray) -> float:
    if values.size < 2:
        return 0.0
    return float(values[1:-1].sum() + 0.5 * (values[0] + values[-1]))


def local_dissimilarity(
    ref_hat: np.ndarray, other_hat: np.ndarray, lo: int, peak: int, hi: int, concave: bool
) -> float:
    """Weighted relative area difference of the aligned signals around a point.

    Each half-interval is compared after removing the median of the absolute
    difference, which cancels vertical offsets between the two signals.  The
    areas are normalised by the wave area of ``ref_hat``.
    """
    diff = np.abs(np.asarray(ref_hat, dtype=float) - np.asarray(other_hat, dtype=float))
    weighted = 0.0
    total_area = 0.0
    for a, b in ((lo, peak), (peak, hi)):
        d_seg = diff[a:b + 1]
        r_seg = ref_hat[a:b + 1]
        width = b - a
        delta_area = _trapezoid(d_seg) - width * float(np.median(d_seg))
        level = r_seg.max() if not concave else r_seg.min()
        area = abs(_trapezoid(r_seg) - width * level)
        total_area += area
        if area > _AREA_EPS:
            weighted += delta_area * delta_area / area
        elif abs(delta_area) > _AREA_EPS:
            return SENTINEL_DISSIMILARITY
    if total_area <= _AREA_EPS:
        return SENTINEL_DISSIMILARITY
    return weighted / total_area


@dataclass
class PointMatch:
    point: RelevantPoint
    concordance: float
    dissimilarity: float

    @property
    def concordant(self) -> bool:
        return self.concordance > 0.0


def piecewise_similarity(
    ref: LeadShape, other: LeadShape, path: WarpingPath, rho_min: float = 50.0, alpha: float = 4.0
) -> tuple[float, list[PointMatch]]:
    """Piecewise similarity of ``other`` with respect to the points of ``ref``.

    ``path.x`` indexes ``ref`` and ``path.y`` indexes ``other``.
    """
    ref_hat, other_hat = reconstruct_aligned(ref.q, other.q, path)
    matches = []
    for p in ref.relevant:
        mi = map_interval(path, p.index, p.lo, p.hi)
        c = concordance_ratio(other.q, p, mi.other_lo, mi.other_hi, rho_min)
        d = local_dissimilarity(ref_hat, other_hat, mi.lo, mi.peak, mi.hi, p.concave)
        matches.append(PointMatch(p, c, float(d)))
    return combine_contributions([(m.concordance, m.dissimilarity) for m in matches], alpha), matches


def combine_contributions(points: Sequence[tuple[float, float]], alpha: float = 4.0) -> float:
    """Sum of ``C * sig(D)`` over concordant points minus the worst non-concordant ``D``."""
    gain = sum(c * sig(d, alpha) for c, d in points if c > 0.0)
    penalties = [d for c, d in points if c <= 0.0]
    return float(gain - (max(penalties) if penalties else 0.0))


@dataclass
class MatchScore:
    """Scores of one lead of a beat against one template lead.

    ``ps_on_beat`` walks the beat's relevant points (checked in the
    template), ``ps_on_template`` the template's points (checked in the
    beat).  The latter is the score used on leads inside a noisy interval.
    """

    s: float
    s_norm: float
    ps_on_beat: float
    ps_on_template: float
    ps_on_beat_norm: float
    ps_on_template_norm: float
    beat_points: list[PointMatch] = field(default_factory=list, repr=False)
    template_points: list[PointMatch] = field(default_factory=list, repr=False)
    degenerate: bool = False

    def score(self, noisy: bool = False) -> float:
        return self.ps_on_template if noisy else self.s

    def normalized(self, noisy: bool = False) -> float:
        return self.ps_on_template_norm if noisy else self.s_norm


def _norm(value: float, count: int) -> float:
    return value / count if count else 0.0


def similarity(
    beat: LeadShape, template: LeadShape, path: WarpingPath, rho_min: float = 50.0, alpha: float = 4.0
) -> MatchScore:
    """Symmetric similarity; ``path.x`` indexes the beat, ``path.y`` the template."""
    ps_beat, beat_points = piecewise_similarity(beat, template, path, rho_min, alpha)
    ps_tmpl, tmpl_points = piecewise_similarity(template, beat, path.swapped(), rho_min, alpha)
    n_b, n_t = beat.n_relevant, template.n_relevant
    s = ps_beat + ps_tmpl
    return MatchScore(
        s=s,
        s_norm=_norm(s, n_b + n_t),
        ps_on_beat=ps_beat,
        ps_on_template=ps_tmpl,
        ps_on_beat_norm=_norm(ps_beat, n_b),
        ps_on_template_norm=_norm(ps_tmpl, n_t),
        beat_points=beat_points,
        template_points=tmpl_points,
        degenerate=n_b == 0 or n_t == 0,
    )


def compare_leads(
    beat: LeadShape, template: LeadShape, delta: int = 5, lam: int = 2, rho_min: float = 50.0, alpha: float = 4.0
) -> tuple[MatchScore, WarpingPath]:
    path = ddtw_path(beat.q, template.q, delta, lam)
    return similarity(beat, template, path, rho_min, alpha), path
