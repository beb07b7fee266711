"""Write a synthetic record as CSV files for the command-line tool.

    python3 demos/write_record.py /tmp/rec
    qrs-stream run --signal /tmp/rec/signal.csv --annotations /tmp/rec/annotations.csv --eval
"""

import sys
from pathlib import Path

from qrs_stream import write_annotations, write_signal
from qrs_stream.synthetic import bigeminy_stream

out = Path(sys.argv[1] if len(sys.argv) > 1 else "record")
out.mkdir(parents=True, exist_ok=True)
stream = bigeminy_stream(300, dropout_beats=(101,), burst_start=200, seed=1)
write_signal(stream.record, out / "signal.csv")
write_annotations(stream.annotations, out / "annotations.csv")
print(f"wrote {len(stream.annotations)} beats to {out}/signal.csv and {out}/annotations.csv")
