"""Dense-tensor computation with reverse-mode differentiation.

Everything the training loop needs: the tape, the selected kernel backend,
Adam, clipping, checkpoints, and finite-difference gradient verification.
"""

from .backend import BACKEND
from .checkpoint import load_checkpoint, save_checkpoint
from .gradcheck import gradient_check
from .optim import AdamState, adam_step, clip_global_norm, global_norm
from .tensor import (DTYPES, GradTape, Tensor, add, assert_finite, concat,
                     div, exp, log, logsumexp, lstm_seq, masked_softmax,
                     matmul, max_, mean_, mul, neg, relu, reshape,
                     reverse_by_length, select_last, sigmoid, softmax, sub,
                     sum_, take_class, tanh, transpose)

__all__ = [
    "BACKEND", "DTYPES", "GradTape", "Tensor", "AdamState",
    "adam_step", "clip_global_norm", "global_norm", "gradient_check",
    "load_checkpoint", "save_checkpoint", "assert_finite",
    "add", "sub", "mul", "div", "neg", "matmul", "tanh", "sigmoid", "relu",
    "exp", "log", "sum_", "mean_", "max_", "reshape", "transpose", "concat",
    "softmax", "masked_softmax", "logsumexp", "take_class", "lstm_seq",
    "reverse_by_length", "select_last",
]
