"""Differentiable-computation core: tensors, layers, Adam, gradient checking."""

from .tensor import (
    NonFiniteError,
    Tensor,
    add,
    as_tensor,
    concat,
    div,
    dropout,
    exp,
    layer_norm,
    log,
    log_softmax,
    logaddexp,
    matmul,
    mul,
    no_grad,
    relu,
    sigmoid,
    softmax,
    sqrt,
    tanh,
    tmax,
    tmean,
    tmin,
    tsum,
)
from .layers import (
    Bidirectional,
    Dense,
    Embedding,
    EncoderBlock,
    GRUCell,
    LSTMCell,
    cross_entropy,
    init_uniform,
    positional_encoding,
    run_recurrent,
    zeros_param,
)
from .optim import Adam
from .gradcheck import grad_check
from .checkpoint import (
    CheckpointError,
    load_checkpoint,
    restore_parameters,
    save_checkpoint,
)

__all__ = [
    "Adam", "Bidirectional", "CheckpointError", "Dense", "Embedding",
    "EncoderBlock", "GRUCell", "LSTMCell", "NonFiniteError", "Tensor",
    "add", "as_tensor", "concat", "cross_entropy", "div", "dropout", "exp",
    "grad_check", "init_uniform", "layer_norm", "load_checkpoint", "log",
    "log_softmax", "logaddexp", "matmul", "mul", "no_grad",
    "positional_encoding", "relu", "restore_parameters", "run_recurrent",
    "save_checkpoint", "sigmoid", "softmax", "sqrt", "tanh", "tmax", "tmean",
    "tmin", "tsum", "zeros_param",
]
