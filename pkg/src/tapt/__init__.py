"""Parallel tempering with learned global proposals, exact Ising baselines and benchmarks.

The torch-backed :mod:`tapt.generator` is imported lazily so that the samplers
and exact methods load quickly.
"""

import importlib

from .exceptions import (
    ClampedSiteError, ConfigError, DimensionError, DomainError, FormatError, GeometryError,
    LayoutError, NumericError, SizeError, TaptError, TrainingDivergedError,
)
from .spin_model import CouplingGraph, LatticeSpec, energy, grid2d

__version__ = "0.1.0"

_SUBMODULES = ("spin_model", "mcmc", "exact", "generator", "tempering", "problems", "cli",
               "experiments")


def __getattr__(name):
    if name in _SUBMODULES:
        return importlib.import_module(f".{name}", __name__)
    raise AttributeError(f"module 'tapt' has no attribute {name!r}")


__all__ = [
    "ClampedSiteError", "ConfigError", "CouplingGraph", "DimensionError", "DomainError",
    "FormatError", "GeometryError", "LatticeSpec", "LayoutError", "NumericError", "SizeError",
    "TaptError", "TrainingDivergedError", "energy", "grid2d", "__version__",
]
