"""Group-based scoring of a clustering against beat annotations.

Clusters are split by rhythm type into groups, the smallest groups are
merged until at most ``max_groups`` remain, and every group is labeled with
the majority class of its beats.  The confusion matrix has the group labels
as rows and the true labels as columns.
"""

from __future__ import annotations

import io
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .rhythm import RHYTHM_TYPES

# Beat codes folded into the five AAMI classes; codes not listed (e.g. '!')
# are excluded from AAMI scoring.
AAMI_MAP = {
    "N": "N", "L": "N", "R": "N", "e": "N", "j": "N", "B": "N",
    "A": "S", "a": "S", "J": "S", "S": "S", "n": "S",
    "V": "V", "E": "V", "r": "V",
    "F": "F",
    "/": "Q", "f": "Q", "Q": "Q", "?": "Q",
}
LABEL_SPACES = ("mitbih", "aami")


def map_label(label: str, space: str = "mitbih") -> str | None:
    if space == "mitbih":
        return label
    if space == "aami":
        return AAMI_MAP.get(label)
    raise ValueError(f"unknown label space {space!r}; expected one of {LABEL_SPACES}")


@dataclass
class Group:
    cluster: int
    rhythm_type: str
    members: list[int]
    label: str | None = None
    parts: list[tuple[int, str]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.members)

    def sort_key(self) -> tuple:
        return len(self.members), self.cluster, RHYTHM_TYPES.index(self.rhythm_type)


def split_groups(clusters: Sequence[int], rhythm_types: Sequence[str]) -> list[Group]:
    """One group per (cluster, rhythm type) pair that holds at least one beat."""
    by_key: dict[tuple[int, str], list[int]] = {}
    for beat, key in enumerate(zip(clusters, rhythm_types)):
        by_key.setdefault(key, []).append(beat)
    return [
        Group(c, r, members, parts=[(c, r)])
        for (c, r), members in sorted(by_key.items(), key=lambda kv: (kv[0][0], RHYTHM_TYPES.index(kv[0][1])))
    ]


def merge_smallest(groups: list[Group], max_groups: int) -> list[Group]:
    """Merge the two smallest groups until at most ``max_groups`` remain.

    Equal sizes are ordered by cluster id, then rhythm type; the merged group
    keeps the key of the larger (later) of the two.
    """
    if max_groups < 1:
        raise ValueError("max_groups must be >= 1")
    groups = list(groups)
    while len(groups) > max_groups:
        groups.sort(key=Group.sort_key)
        a, b = groups[0], groups[1]
        merged = Group(b.cluster, b.rhythm_type, sorted(a.members + b.members), parts=b.parts + a.parts)
        groups = [merged] + groups[2:]
    groups.sort(key=lambda g: (g.cluster, RHYTHM_TYPES.index(g.rhythm_type)))
    return groups


def majority_label(labels: Iterable[str]) -> str:
    counts = Counter(labels)
    top = max(counts.values())
    return min(label for label, k in counts.items() if k == top)


def split_and_merge_groups(
    clusters: Sequence[int], rhythm_types: Sequence[str], max_groups: int = 25
) -> list[Group]:
    return merge_smallest(split_groups(clusters, rhythm_types), max_groups)


@dataclass
class ConfusionMatrix:
    labels: list[str]
    counts: np.ndarray  # rows: group label, columns: true label

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def purity(self) -> float:
        return float(np.trace(self.counts) / self.total) if self.total else float("nan")

    def _per_class(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        diag = np.diag(self.counts).astype(float)
        return diag, self.counts.sum(axis=0).astype(float), self.counts.sum(axis=1).astype(float)

    def sensitivity(self) -> dict[str, float]:
        diag, col, _ = self._per_class()
        return {c: (diag[i] / col[i] if col[i] else float("nan")) for i, c in enumerate(self.labels)}

    def positive_predictivity(self) -> dict[str, float | None]:
        """``None`` where no group carries the label (reported as "-")."""
        diag, _, row = self._per_class()
        return {c: (diag[i] / row[i] if row[i] else None) for i, c in enumerate(self.labels)}

    def false_positive_rate(self) -> dict[str, float]:
        diag, col, row = self._per_class()
        out = {}
        for i, c in enumerate(self.labels):
            negatives = self.total - col[i]
            out[c] = (row[i] - diag[i]) / negatives if negatives else 0.0
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("group_label," + ",".join(self.labels) + "\n")
        for i, c in enumerate(self.labels):
            buf.write(c + "," + ",".join(str(int(v)) for v in self.counts[i]) + "\n")
        return buf.getvalue()

    def metrics_csv(self) -> str:
        se, ppv, fpr = self.sensitivity(), self.positive_predictivity(), self.false_positive_rate()
        lines = ["class,beats,se_pct,ppv_pct,fpr_pct"]
        col = self.counts.sum(axis=0)
        for i, c in enumerate(self.labels):
            lines.append(f"{c},{int(col[i])},{_pct(se[c])},{_pct(ppv[c])},{_pct(fpr[c])}")
        lines.append(f"purity,{self.total},{_pct(self.purity)},,")
        return "\n".join(lines) + "\n"

    def to_table(self) -> str:
        width = max(6, *(len(c) + 2 for c in self.labels))
        head = "group\\true".ljust(12) + "".join(c.rjust(width) for c in self.labels)
        rows = [head]
        for i, c in enumerate(self.labels):
            rows.append(c.ljust(12) + "".join(str(int(v)).rjust(width) for v in self.counts[i]))
        se, ppv, fpr = self.sensitivity(), self.positive_predictivity(), self.false_positive_rate()
        rows.append("")
        rows.append("class".ljust(12) + "Se".rjust(9) + "+P".rjust(9) + "FPR".rjust(9))
        for c in self.labels:
            rows.append(c.ljust(12) + _pct(se[c]).rjust(9) + _pct(ppv[c]).rjust(9) + _pct(fpr[c]).rjust(9))
        rows.append(f"purity {_pct(self.purity)} % over {self.total} beats")
        return "\n".join(rows) + "\n"


def _pct(x: float | None) -> str:
    if x is None:
        return "-"
    if np.isnan(x):
        return "nan"
    return f"{100.0 * x:.2f}"


def confusion_from_pairs(predicted: Sequence[str], true: Sequence[str]) -> ConfusionMatrix:
    labels = sorted(set(true) | set(predicted))
    index = {c: i for i, c in enumerate(labels)}
    counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for p, t in zip(predicted, true):
        counts[index[p], index[t]] += 1
    return ConfusionMatrix(labels, counts)


def pool_matrices(matrices: Iterable[ConfusionMatrix]) -> ConfusionMatrix:
    """Sum per-record matrices over the union of their labels."""
    matrices = list(matrices)
    labels = sorted({c for m in matrices for c in m.labels})
    index = {c: i for i, c in enumerate(labels)}
    counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for m in matrices:
        idx = [index[c] for c in m.labels]
        counts[np.ix_(idx, idx)] += m.counts
    return ConfusionMatrix(labels, counts)


@dataclass
class EvaluationReport:
    groups: list[Group]
    matrix: ConfusionMatrix
    excluded: int  # beats without a usable label in the chosen label space

    @property
    def purity(self) -> float:
        return self.matrix.purity


def confusion_and_metrics(groups: Sequence[Group], true_labels: Sequence[str | None]) -> EvaluationReport:
    """Label each group by majority and tabulate group label against true label.

    Beats whose true label is ``None`` are excluded and counted.
    """
    predicted, truth = [], []
    excluded = 0
    labeled = []
    for g in groups:
        members = [b for b in g.members if true_labels[b] is not None]
        excluded += len(g.members) - len(members)
        g.label = majority_label(true_labels[b] for b in members) if members else None
        labeled.append(g)
        for b in members:
            predicted.append(g.label)
            truth.append(true_labels[b])
    return EvaluationReport(labeled, confusion_from_pairs(predicted, truth), excluded)


def evaluate(
    clusters: Sequence[int],
    rhythm_types: Sequence[str],
    labels: Sequence[str],
    max_groups: int = 25,
    space: str = "mitbih",
) -> EvaluationReport:
    groups = split_and_merge_groups(clusters, rhythm_types, max_groups)
    return confusion_and_metrics(groups, [map_label(l, space) for l in labels])
