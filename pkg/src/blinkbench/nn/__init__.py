from .layers import Activation, AvgPool2D, Conv2D, Dense, Flatten, stable_sigmoid
from .losses import bce_loss, mean_bce
from .model import Model, Tape, build_eye_state_cnn, load_model, save_model
from .optim import Adam

__all__ = [
    "Activation",
    "AvgPool2D",
    "Conv2D",
    "Dense",
    "Flatten",
    "stable_sigmoid",
    "bce_loss",
    "mean_bce",
    "Model",
    "Tape",
    "build_eye_state_cnn",
    "load_model",
    "save_model",
    "Adam",
]
