"""Homology of the quantized 2-sphere recovered from simulated measurement statistics."""

from .kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
