"""quadmech: quantum simulation of a quadratically coupled optomechanical system."""

__version__ = "0.1.0"

from .hilbert import HilbertSpec
from .model import ModelParams

__all__ = ["HilbertSpec", "ModelParams", "__version__"]
