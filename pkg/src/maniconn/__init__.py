"""Heteroclinic connection search between invariant circles of stroboscopic maps."""

from .models import ModelParams
from .flowmap import FlowSettings

__all__ = ["ModelParams", "FlowSettings"]
__version__ = "0.1.0"
