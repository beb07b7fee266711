import numpy as np
import pytest

from qrs_stream.characterize import WaveParams
from qrs_stream.config import RunConfig
from qrs_stream.synthetic import bigeminy_stream


@pytest.fixture(scope="session")
def params360():
    return WaveParams.from_config(RunConfig(), 360.0)


@pytest.fixture(scope="session")
def bigeminy_run():
    """Criterion-6 style stream run once through the pipeline."""
    from qrs_stream.pipeline import process_record

    stream = bigeminy_stream(300, dropout_beats=(101,), burst_start=200, seed=1)
    result = process_record(stream.record, [a.sample_index for a in stream.annotations], stream.classes,
                            evaluate_groups=True)
    return stream, result


def triangle(height, half, w=108, centre=54):
    x = np.arange(w)
    return np.clip(height * (1 - np.abs(x - centre) / half), 0, None)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.LINES:
        terminalreporter.section("acceptance criteria")
        for line in mod.LINES:
            terminalreporter.write_line(line)
