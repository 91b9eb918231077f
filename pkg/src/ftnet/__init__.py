"""Futures trading network construction and analysis."""
from ._accel import backend

__version__ = "0.1.0"
__all__ = ["backend", "__version__"]
