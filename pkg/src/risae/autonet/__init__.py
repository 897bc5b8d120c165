from .checkpoint import architecture_hash, load_checkpoint, save_checkpoint
from .layers import (
    LayerParams,
    Stack,
    batchnorm_forward,
    bce_loss,
    ce_loss,
    dense_forward,
    power_normalize,
    softmax,
)
from .optim import AdamState, adam_step, step_decay_lr
from .tape import Tape, Var, relu

__all__ = [
    "architecture_hash", "load_checkpoint", "save_checkpoint",
    "LayerParams", "Stack", "batchnorm_forward", "bce_loss", "ce_loss", "dense_forward",
    "power_normalize", "softmax", "AdamState", "adam_step", "step_decay_lr",
    "Tape", "Var", "relu",
]
