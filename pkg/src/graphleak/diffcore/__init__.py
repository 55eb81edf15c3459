"""Minimal dense numerical core: seeded streams, tensors, reverse-mode AD."""

from .optim import Adam
from .rng import RngStream
from .tensor import (
    ContractError,
    DimensionError,
    DomainError,
    Tensor,
    add,
    affine,
    backward,
    bce_with_logits_mean,
    clamp01,
    cross_entropy_rows,
    elementwise,
    gather_rc,
    log,
    make_op,
    matmul,
    mul,
    relu,
    reshape,
    rsqrt_or_zero,
    scale,
    sigmoid,
    softmax_row,
    sub,
    sum_axis,
    tmean,
    transpose,
    tsum,
    zero_grad,
)

__all__ = [
    "Adam",
    "RngStream",
    "Tensor",
    "ContractError",
    "DimensionError",
    "DomainError",
    "add",
    "affine",
    "backward",
    "bce_with_logits_mean",
    "clamp01",
    "cross_entropy_rows",
    "elementwise",
    "gather_rc",
    "log",
    "make_op",
    "matmul",
    "mul",
    "relu",
    "reshape",
    "rsqrt_or_zero",
    "scale",
    "sigmoid",
    "softmax_row",
    "sub",
    "sum_axis",
    "tmean",
    "transpose",
    "tsum",
    "zero_grad",
]
