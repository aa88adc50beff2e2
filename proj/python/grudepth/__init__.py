"""Recurrent depth-from-video engine: python bindings for the core operations."""

from ._grudepth import (
    ConfigError,
    IoError,
    Net,
    NumericError,
    ShapeError,
    conv2d,
    depth_to_space,
    evaluate,
    gradcheck,
    lrelu,
    quantize_depth,
    space_to_depth,
)

__all__ = [
    "ConfigError",
    "IoError",
    "Net",
    "NumericError",
    "ShapeError",
    "conv2d",
    "depth_to_space",
    "evaluate",
    "gradcheck",
    "lrelu",
    "quantize_depth",
    "space_to_depth",
]
