from .layers import BatchNorm, CbaaLayer, Linear, ReLU, SepConvStage, l1_loss
from .model import NetworkSpec, SacNetwork
from .optim import NAdam, ReduceLROnPlateau
from .training import TrainConfig, TrainResult, train_network

__all__ = [
    "BatchNorm",
    "CbaaLayer",
    "Linear",
    "NAdam",
    "NetworkSpec",
    "ReLU",
    "ReduceLROnPlateau",
    "SacNetwork",
    "SepConvStage",
    "TrainConfig",
    "TrainResult",
    "l1_loss",
    "train_network",
]
