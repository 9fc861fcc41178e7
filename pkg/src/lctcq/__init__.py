"""Low-complexity dependent (trellis-coded) quantization laboratory."""

from lctcq.quant_kernel import Block, QuantConfig, UNCODED
from lctcq.rate_estimator import RateModelParams
from lctcq.trellis import OpCounters, TrellisResult, brute_force_search, tcq_search
from lctcq.low_complexity import DepartureConfig, accelerated_search

__all__ = [
    "Block",
    "QuantConfig",
    "UNCODED",
    "RateModelParams",
    "OpCounters",
    "TrellisResult",
    "tcq_search",
    "brute_force_search",
    "DepartureConfig",
    "accelerated_search",
]
