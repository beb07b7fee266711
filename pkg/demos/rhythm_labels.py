"""Rhythm labels for a regular rhythm with one premature beat.

The RR model is learned from the first fifteen intervals; early beats are
labeled retroactively once it exists.  A premature beat (P) followed by a
compensatory pause (C) stands out against the normal rhythm.
"""

import numpy as np

from qrs_stream.rhythm import label_record

rr = [300] * 20 + [200, 400] + [300] * 8 + [310, 295, 305]
fiducials = np.concatenate([[0], np.cumsum(rr)])
labels = label_record(fiducials)

for n, (t, label) in enumerate(zip(fiducials, labels)):
    rr_in = "" if n == 0 else f"rr={fiducials[n] - fiducials[n - 1]:4d}"
    mark = "" if label.value == "N" else "  <--"
    print(f"beat {n:2d} t={t:5d} {rr_in:8s} {label.value:3s} ({label.rhythm_type}){mark}")
