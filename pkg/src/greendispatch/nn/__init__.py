"""Minimal differentiable function-approximation kernel."""

from .gradcheck import GradCheckReport, grad_check
from .network import (
    ConvSpec,
    NetworkConfig,
    backward,
    backward_batch,
    forward,
    forward_batch,
    init_params,
    layout,
    param_count,
    softmax,
)
from .optim import optimizer_step
from .params import (
    GradientSet,
    ParameterSet,
    glorot_init,
    load_checkpoint,
    save_checkpoint,
)

__all__ = [
    "ConvSpec",
    "GradCheckReport",
    "GradientSet",
    "NetworkConfig",
    "ParameterSet",
    "backward",
    "backward_batch",
    "forward",
    "forward_batch",
    "glorot_init",
    "grad_check",
    "init_params",
    "layout",
    "load_checkpoint",
    "optimizer_step",
    "param_count",
    "save_checkpoint",
    "softmax",
]
