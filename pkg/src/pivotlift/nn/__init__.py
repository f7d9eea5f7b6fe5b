"""Dense networks, reverse-mode autodiff, and the Adam optimizer."""

from . import tensor
from .adam import Adam
from .checkpoint import load_checkpoint, save_checkpoint
from .gradcheck import check_mlp, finite_diff_check
from .mlp import Mlp, MlpSpec
from .tensor import Tensor, no_grad

__all__ = [
    "tensor", "Tensor", "no_grad", "Mlp", "MlpSpec", "Adam",
    "finite_diff_check", "check_mlp", "save_checkpoint", "load_checkpoint",
]
