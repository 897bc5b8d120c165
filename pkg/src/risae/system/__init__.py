from .data import Dataset, build_dataset
from .deploy import make_channel
from .io import load_model, save_model
from .model import (
    ForwardResult,
    ModelParams,
    SystemDims,
    decide,
    decode,
    encode,
    end_to_end_forward,
    one_hot,
    ris_control,
)
from .train import TrainConfig, TrainHistory, evaluate_split, noise_var_for_snr, train

__all__ = [
    "Dataset", "build_dataset", "make_channel", "load_model", "save_model", "ForwardResult", "ModelParams",
    "SystemDims", "decide", "decode", "encode", "end_to_end_forward", "one_hot", "ris_control",
    "TrainConfig", "TrainHistory", "evaluate_split", "noise_var_for_snr", "train",
]
