"""Self-contained numpy autodiff: tensors, layers, losses, Adam, checkpoints."""

from .tensor import Tensor, as_tensor, clamp, concat, maximum, minimum, no_grad, stack
from .layers import (
    Conv,
    Linear,
    Network,
    bilinear_weights,
    conv2d,
    kaiming_uniform,
    roi_crop_t,
    roi_sample_grid,
    upsample2x,
)
from .losses import cross_entropy_cells, l2_traj_loss, masked_residual_loss
from .optim import AdamState
from .checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "Tensor",
    "as_tensor",
    "clamp",
    "concat",
    "maximum",
    "minimum",
    "no_grad",
    "stack",
    "Conv",
    "Linear",
    "Network",
    "bilinear_weights",
    "conv2d",
    "kaiming_uniform",
    "roi_crop_t",
    "roi_sample_grid",
    "upsample2x",
    "cross_entropy_cells",
    "l2_traj_loss",
    "masked_residual_loss",
    "AdamState",
    "load_checkpoint",
    "save_checkpoint",
]
