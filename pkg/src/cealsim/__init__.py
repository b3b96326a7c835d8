"""Communication-efficient distributed online convex optimization simulator."""

from .baselines import MinibatchConfig, run_minibatch
from .ceal import CealConfig, CealRun, run_ceal
from .codec import Message, check_capacity, decode, encode
from .metrics import RunTrace, bits_scaling_fit, linear_fit, regret_scaling_fit
from .normest import NormEstResult, run_normest
from .objective import ProblemInstance, eval_f, grad, make_instance, noisy_grad
from .quant import QuantizedVector, dequantize, quantize
from .schedule import ScheduleParams, params_for

__version__ = "0.1.0"

__all__ = [
    "CealConfig",
    "CealRun",
    "Message",
    "MinibatchConfig",
    "NormEstResult",
    "ProblemInstance",
    "QuantizedVector",
    "RunTrace",
    "ScheduleParams",
    "bits_scaling_fit",
    "check_capacity",
    "decode",
    "dequantize",
    "encode",
    "eval_f",
    "grad",
    "linear_fit",
    "make_instance",
    "noisy_grad",
    "params_for",
    "quantize",
    "regret_scaling_fit",
    "run_ceal",
    "run_minibatch",
    "run_normest",
]
