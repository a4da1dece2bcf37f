from .autograd import (Tensor, activation, as_tensor, backward, concat, conv2d, leaky_relu,
                       relu, sigmoid, tanh, transposed_conv2d)
from .checkpoint import load_arrays, load_params, save_arrays, save_params
from .optim import Adam
from .gradcheck import check_gradients
from .params import ParamSet

__all__ = [
    "Tensor", "activation", "as_tensor", "backward", "concat", "conv2d", "leaky_relu", "relu",
    "sigmoid", "tanh", "transposed_conv2d", "load_arrays", "load_params", "save_arrays",
    "save_params", "Adam", "ParamSet", "check_gradients",
]
