from .gradcheck import GradCheckResult, grad_check
from .layers import Conv1d, Dense, Mlp, conv1d
from .losses import (KL_FLOOR, cross_entropy_batch, kl_divergence, softmax,
                     softmax_cross_entropy)
from .optim import Adam, SgdMomentum
from .tensor import Tensor

__all__ = [
    "Adam", "Conv1d", "Dense", "GradCheckResult", "KL_FLOOR", "Mlp",
    "SgdMomentum", "Tensor", "conv1d", "cross_entropy_batch", "grad_check",
    "kl_divergence", "softmax", "softmax_cross_entropy",
]
