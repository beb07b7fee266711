"""Real-time adaptive clustering of QRS morphologies in multilead ECG."""

from .config import ConfigError, RunConfig, load_config
from .io import BeatAnnotation, EcgRecord, read_annotations, read_signal, write_annotations, write_signal
from .pipeline import BeatEvent, Engine, RunResult, process_record, run_record

__all__ = [
    "BeatAnnotation",
    "BeatEvent",
    "ConfigError",
    "EcgRecord",
    "Engine",
    "RunConfig",
    "RunResult",
    "load_config",
    "process_record",
    "read_annotations",
    "read_signal",
    "run_record",
    "write_annotations",
    "write_signal",
]
