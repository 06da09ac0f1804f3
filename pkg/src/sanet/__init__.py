"""Sparsely activated networks and the flithos compression/accuracy metric."""

from .activations import ActivationKind, ActivationResult
# the flithos() function stays in its submodule so ``sanet.flithos`` keeps naming the module
from .flithos import FlithosReport, inverse_compression_ratio, mean_flithos, normalized_loss
from .model import AdamState, ForwardTrace, SanModel, adam_step, backward, forward, init_model, mae
from .tensor import conv_same, conv_same_adjoint_input, conv_same_adjoint_kernel

__version__ = "0.1.0"

__all__ = [
    "ActivationKind",
    "ActivationResult",
    "AdamState",
    "FlithosReport",
    "ForwardTrace",
    "SanModel",
    "adam_step",
    "backward",
    "conv_same",
    "conv_same_adjoint_input",
    "conv_same_adjoint_kernel",
    "forward",
    "init_model",
    "inverse_compression_ratio",
    "mae",
    "mean_flithos",
    "normalized_loss",
]
