"""Single-pass sampling from data streams.

Reservoir methods (unknown stream length) live in :mod:`streamsample.reservoir`,
sequential methods (known size or weight) in :mod:`streamsample.sequential`.
Hot loops run in a compiled core when it is built, and in pure Python
otherwise; ``streamsample.BACKEND`` says which.
"""

from ._backend import BACKEND, compiled_available
from .core import SampleResult, rng_new
from .errors import (
    ImpossibleSamplingError,
    IncompatibleSamplerError,
    InvalidCapacityError,
    InvalidRequestError,
    InvalidWeightError,
    OracleCapacityError,
    SamplingError,
    TruncatedStreamError,
    UsageError,
)
from .reservoir import ReservoirMethod, ReservoirSampler, merge
from .sequential import (
    SequentialMethod,
    SequentialSampler,
    SortedUniforms,
    combine,
    itsample,
    skip_without_replacement,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ImpossibleSamplingError",
    "IncompatibleSamplerError",
    "InvalidCapacityError",
    "InvalidRequestError",
    "InvalidWeightError",
    "OracleCapacityError",
    "ReservoirMethod",
    "ReservoirSampler",
    "SampleResult",
    "SamplingError",
    "SequentialMethod",
    "SequentialSampler",
    "SortedUniforms",
    "TruncatedStreamError",
    "UsageError",
    "combine",
    "compiled_available",
    "itsample",
    "merge",
    "rng_new",
    "skip_without_replacement",
]
