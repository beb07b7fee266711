"""Plain-text readers and writers for ECG records and beat annotations.

Signal CSV::

    fs=360[,gain_<lead>=<uv_per_unit>...]
    MLII,V1
    -12.5,3.0
    ...

Annotation CSV::

    sample,label
    77,N
    370,V
"""

from __future__ import annotations

import logging
import os
import warnings
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

logger = logging.getLogger(__name__)

#: Beat annotation codes of the MIT-BIH Arrhythmia Database.
MITBIH_BEAT_LABELS = frozenset("NLRBAaJSVrFejnE/fQ?!")
#: Non-beat annotation codes (rhythm changes, noise markers, comments...).
MITBIH_NON_BEAT_LABELS = frozenset("[]x()ptu`'^|~+sT*D=\"@")


class ParseError(ValueError):
    pass


class AnnotationOrderError(ValueError):
    pass


@dataclass
class EcgRecord:
    sampling_rate_hz: float
    lead_names: list[str]
    samples: np.ndarray  # (n_leads, n_samples), microvolts

    def __post_init__(self) -> None:
        self.samples = np.atleast_2d(np.asarray(self.samples, dtype=float))
        if self.sampling_rate_hz <= 0:
            raise ValueError("sampling rate must be positive")
        if self.samples.shape[0] < 1 or len(self.lead_names) != self.samples.shape[0]:
            raise ValueError(
                f"{len(self.lead_names)} lead names for {self.samples.shape[0]} sample rows"
            )

    @property
    def n_leads(self) -> int:
        return self.samples.shape[0]

    def __len__(self) -> int:
        return self.samples.shape[1]


@dataclass(frozen=True)
class BeatAnnotation:
    sample_index: int
    class_label: str


@dataclass
class _Header:
    fs: float
    gains: dict[str, float] = field(default_factory=dict)


def _parse_header(line: str) -> _Header:
    fs = None
    gains = {}
    for item in line.split(","):
        item = item.strip()
        if not item:
            continue
        key, sep, value = item.partition("=")
        if not sep:
            raise ParseError(f"line 1: expected key=value, got {item!r}")
        key = key.strip()
        try:
            number = float(value)
        except ValueError:
            raise ParseError(f"line 1: non-numeric value for {key!r}: {value!r}") from None
        if key == "fs":
            fs = number
        elif key.startswith("gain_"):
            gains[key[len("gain_"):]] = number
        else:
            raise ParseError(f"line 1: unknown header field {key!r}")
    if fs is None:
        raise ParseError("line 1: missing 'fs=<hz>' header")
    if not fs > 0:
        raise ParseError(f"line 1: sampling rate must be positive, got {fs}")
    return _Header(fs, gains)


def read_signal(path: str | os.PathLike) -> EcgRecord:
    """Read a signal CSV, applying optional per-lead gains (to microvolts)."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError("line 1: empty file")
    header = _parse_header(lines[0])
    if len(lines) < 2 or not lines[1].strip():
        raise ParseError("line 2: missing lead names")
    names = [name.strip() for name in lines[1].split(",")]
    if any(not name for name in names):
        raise ParseError("line 2: empty lead name")
    unknown = set(header.gains) - set(names)
    if unknown:
        raise ParseError(f"line 1: gain given for unknown lead(s) {sorted(unknown)}")

    rows = []
    for lineno, line in enumerate(lines[2:], start=3):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != len(names):
            raise ParseError(f"line {lineno}: expected {len(names)} values, got {len(cells)}")
        try:
            rows.append([float(cell) for cell in cells])
        except ValueError:
            raise ParseError(f"line {lineno}: non-numeric sample in {line!r}") from None
    if not rows:
        raise ParseError("no samples")

    samples = np.array(rows, dtype=float).T
    if not np.all(np.isfinite(samples)):
        raise ParseError("non-finite sample value")
    for i, name in enumerate(names):
        if name in header.gains:
            samples[i] *= header.gains[name]
    return EcgRecord(header.fs, names, samples)


def write_signal(record: EcgRecord, path: str | os.PathLike) -> None:
    # repr() round-trips floats exactly
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"fs={record.sampling_rate_hz!r}\n")
        fh.write(",".join(record.lead_names) + "\n")
        for row in record.samples.T:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_annotations(path: str | os.PathLike) -> list[BeatAnnotation]:
    """Read an annotation CSV.

    Fiducials must be strictly increasing.  Labels outside the MIT-BIH code
    set are kept verbatim with a warning.
    """
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or [c.strip() for c in lines[0].split(",")] != ["sample", "label"]:
        raise ParseError("line 1: expected header 'sample,label'")

    annotations = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",", 1)
        if len(cells) != 2:
            raise ParseError(f"line {lineno}: expected 'sample,label', got {line!r}")
        raw_index, label = cells[0].strip(), cells[1].strip()
        try:
            index = int(raw_index)
        except ValueError:
            raise ParseError(f"line {lineno}: non-integer sample index {raw_index!r}") from None
        if index < 0:
            raise ParseError(f"line {lineno}: negative sample index {index}")
        if not label:
            raise ParseError(f"line {lineno}: empty label")
        if annotations and index <= annotations[-1].sample_index:
            raise AnnotationOrderError(
                f"line {lineno}: non-increasing fiducials "
                f"({annotations[-1].sample_index} then {index})"
            )
        if label not in MITBIH_BEAT_LABELS and label not in MITBIH_NON_BEAT_LABELS:
            warnings.warn(f"line {lineno}: unknown label {label!r} kept verbatim", stacklevel=2)
        annotations.append(BeatAnnotation(index, label))
    return annotations


def write_annotations(annotations: Iterable[BeatAnnotation], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("sample,label\n")
        for ann in annotations:
            fh.write(f"{ann.sample_index},{ann.class_label}\n")


def is_beat(annotation: BeatAnnotation) -> bool:
    """True for beat codes and for unknown codes (pass-through policy)."""
    return annotation.class_label not in MITBIH_NON_BEAT_LABELS
