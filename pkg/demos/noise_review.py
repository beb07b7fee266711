"""Watch the noise review undo a cluster opened by an artifact.

One beat loses contact on lead 1.  Its shape matches nothing, so a new
cluster is created on the spot; fifteen beats later the review finds that the
creation is explained by noise on that lead, deletes the cluster and moves
the beat to its closest cluster.  A later ten-beat burst on lead 1 is handled
by the noisy-interval scoring without creating anything.
"""

from qrs_stream import process_record
from qrs_stream.synthetic import bigeminy_stream

stream = bigeminy_stream(300, dropout_beats=(101,), burst_start=200, seed=1)
fiducials = [a.sample_index for a in stream.annotations]
result = process_record(stream.record, fiducials, stream.classes)

print("artifact beat:", stream.artifact_beats, " burst beats:", stream.burst_beats)
for e in result.events:
    if e.kind in ("revise", "merge") or (e.kind in ("assign", "failed") and e.created):
        print(" ", e.to_line())
    elif e.kind in ("assign", "failed") and e.noise and any(e.noise) and e.beat in stream.burst_beats[:3]:
        print(" ", e.to_line(), " <- noisy lead, scored on template waves only")

print("surviving clusters:", sorted(set(result.clusters)))
