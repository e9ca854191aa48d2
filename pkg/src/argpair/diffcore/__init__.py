from . import ops
from .gradcheck import GradReport, grad_check, relative_error
from .params import ParameterStore, glorot, load_arrays, load_metadata, save_checkpoint
from .tensor import GraphError, ShapeError, Tensor, backward, deferred, forward

__all__ = [
    "GradReport", "GraphError", "ParameterStore", "ShapeError", "Tensor", "backward",
    "deferred", "forward", "glorot", "grad_check", "load_arrays", "load_metadata", "ops",
    "relative_error", "save_checkpoint",
]
