"""Static reinsurance and investment strategies that minimize the terminal ruin probability."""

from .kernels import BACKEND
from .model import AssetModel, ClaimDistribution, ModelParams, Strategy

__all__ = ["BACKEND", "AssetModel", "ClaimDistribution", "ModelParams", "Strategy"]
__version__ = "0.1.0"
