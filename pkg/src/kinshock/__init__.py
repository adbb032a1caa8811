"""Kinetic relaxation models: Chapman-Enskog limits, canonical reduction,
invariant manifolds and small-amplitude shock profiles."""

__version__ = "0.1.0"

from .errors import KinshockError
from .model import KineticModel, build_synthetic_model, check_hypotheses
from .presets import get_preset, preset_names

__all__ = ["KinshockError", "KineticModel", "build_synthetic_model", "check_hypotheses",
           "get_preset", "preset_names", "__version__"]
