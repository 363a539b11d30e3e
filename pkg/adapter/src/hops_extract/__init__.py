"""Bridge from image folders to hops descriptor files.

Runs a feature extractor over an ordered frame list, optionally augmenting
each image first (Poisson shot noise, downsample-upsample blur, gamma
darkening), and writes the engine's binary descriptor format atomically with
a JSON metadata sidecar.
"""

from .augment import (
    KINDS,
    apply,
    darken,
    downsample_upsample,
    poisson_noise,
)
from .errors import AdapterError, JobError, ValidationError
from .extractors import available, grid512, register_extractor, resolve
from .jobs import ADAPTER_VERSION, ExtractionJob, extract, load_frames_file

__version__ = ADAPTER_VERSION

__all__ = [
    "ADAPTER_VERSION",
    "AdapterError",
    "ExtractionJob",
    "JobError",
    "KINDS",
    "ValidationError",
    "apply",
    "available",
    "darken",
    "downsample_upsample",
    "extract",
    "grid512",
    "load_frames_file",
    "poisson_noise",
    "register_extractor",
    "resolve",
]
