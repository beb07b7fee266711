"""Derivative dynamic time warping with a Sakoe-Chiba band and slope limit.

Paths are 0-based pairs ``(x, y)`` over the first differences of the two
windows (length ``w - 1``): ``x`` indexes the first signal, ``y`` the second.
A step ``(1, 0)`` advances only ``x``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np


@dataclass
class WarpingPath:
    pairs: np.ndarray  # (K, 2) int
    cost: float

    def __len__(self) -> int:
        return self.pairs.shape[0]

    @property
    def x(self) -> np.ndarray:
        return self.pairs[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.pairs[:, 1]

    def swapped(self) -> "WarpingPath":
        return WarpingPath(self.pairs[:, ::-1].copy(), self.cost)


@numba.njit(cache=True)
def _ddtw(a, b, delta, lam):
    n = a.size
    n_states = 1 + 2 * lam  # 0: diagonal, 1..lam: (1,0) run, lam+1..2lam: (0,1) run
    inf = np.inf
    cost = np.full((n, n, n_states), inf)
    pred = np.full((n, n, n_states), -1, dtype=np.int8)
    cost[0, 0, 0] = abs(a[0] - b[0])
    for x in range(n):
        y_lo = max(0, x - delta + 1)
        y_hi = min(n - 1, x + delta - 1)
        for y in range(y_lo, y_hi + 1):
            if x == 0 and y == 0:
                continue
            c = abs(a[x] - b[y])
            if x > 0 and y > 0:
                best = inf
                arg = -1
                for s in range(n_states):  # preference: diagonal, (1,0), (0,1)
                    v = cost[x - 1, y - 1, s]
                    if v < best:
                        best = v
                        arg = s
                if arg >= 0:
                    cost[x, y, 0] = best + c
                    pred[x, y, 0] = arg
            if x > 0:
                best = cost[x - 1, y, 0]
                arg = 0 if best < inf else -1
                for s in range(lam + 1, n_states):
                    v = cost[x - 1, y, s]
                    if v < best:
                        best = v
                        arg = s
                if arg >= 0:
                    cost[x, y, 1] = best + c
                    pred[x, y, 1] = arg
                for r in range(2, lam + 1):
                    v = cost[x - 1, y, r - 1]
                    if v < inf:
                        cost[x, y, r] = v + c
                        pred[x, y, r] = r - 1
            if y > 0:
                best = cost[x, y - 1, 0]
                arg = 0 if best < inf else -1
                for s in range(1, lam + 1):
                    v = cost[x, y - 1, s]
                    if v < best:
                        best = v
                        arg = s
                if arg >= 0:
                    cost[x, y, lam + 1] = best + c
                    pred[x, y, lam + 1] = arg
                for r in range(2, lam + 1):
                    v = cost[x, y - 1, lam + r - 1]
                    if v < inf:
                        cost[x, y, lam + r] = v + c
                        pred[x, y, lam + r] = lam + r - 1

    best = inf
    state = -1
    for s in range(n_states):
        v = cost[n - 1, n - 1, s]
        if v < best:
            best = v
            state = s
    path = np.empty((2 * n, 2), dtype=np.int64)
    k = 0
    x = n - 1
    y = n - 1
    while True:
        path[k, 0] = x
        path[k, 1] = y
        k += 1
        if x == 0 and y == 0:
            break
        prev = pred[x, y, state]
        if state == 0:
            x -= 1
            y -= 1
        elif state <= lam:
            x -= 1
        else:
            y -= 1
        state = prev
    return path[:k][::-1].copy(), best


def derivative(q: np.ndarray) -> np.ndarray:
    return np.diff(np.asarray(q, dtype=float))


def ddtw_path(q_a: np.ndarray, q_b: np.ndarray, delta: int = 5, lam: int = 2) -> WarpingPath:
    """Optimal warping path between the first differences of two windows.

    Minimizes ``sum |da[x] - db[y]|`` over paths from ``(0, 0)`` to
    ``(w-2, w-2)`` with ``|x - y| < delta`` and no more than ``lam``
    consecutive identical non-diagonal steps.  Equal-cost alternatives are
    resolved preferring a diagonal, then ``(1, 0)``, then ``(0, 1)`` step
    while backtracking.
    """
    da, db = derivative(q_a), derivative(q_b)
    if da.size != db.size:
        raise ValueError(f"windows differ in length: {da.size + 1} vs {db.size + 1}")
    if da.size == 0:
        raise ValueError("windows need at least two samples")
    if delta < 1 or lam < 1:
        raise ValueError("delta and lam must be >= 1")
    pairs, cost = _ddtw(da, db, int(delta), int(lam))
    return WarpingPath(pairs, float(cost))


def reconstruct_aligned(q_a: np.ndarray, q_b: np.ndarray, path: WarpingPath) -> tuple[np.ndarray, np.ndarray]:
    """Rebuild both signals (length K + 1) from their path-aligned differences."""
    q_a = np.asarray(q_a, dtype=float)
    q_b = np.asarray(q_b, dtype=float)
    da, db = np.diff(q_a), np.diff(q_b)
    hat_a = np.concatenate([[q_a[0]], q_a[0] + np.cumsum(da[path.x])])
    hat_b = np.concatenate([[q_b[0]], q_b[0] + np.cumsum(db[path.y])])
    return hat_a, hat_b


@dataclass(frozen=True)
class MappedInterval:
    peak: int  # index into the aligned signals
    lo: int
    hi: int
    other_lo: int  # support mapped back into the second signal's window
    other_hi: int


def map_interval(path: WarpingPath, j: int, lo: int, hi: int) -> MappedInterval:
    """Map a window position and its support through the warping path.

    The last window sample lies beyond the derivative domain; it is looked
    up as the last difference and mapped to the sample that difference
    ends on, so a wave touching the window end keeps its final sample.
    """
    last = int(path.x.max())
    x = path.x
    j_c, lo_c, hi_c = (min(max(v, 0), last) for v in (j, lo, hi))
    peak = int(np.flatnonzero(x == j_c)[-1]) + (j > last)
    lo_k = int(np.flatnonzero(x == lo_c)[0])
    hi_k = int(np.flatnonzero(x == hi_c)[-1])
    return MappedInterval(peak, lo_k, hi_k + (hi > last), int(path.y[lo_k]), int(path.y[hi_k]) + (hi > last))
