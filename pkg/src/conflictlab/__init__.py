"""Radial laboratory for two-species chemotaxis with conflict on the unit disk.

Steady states of the nonlocal Liouville system, the free-energy functionals
and their gradient flows, blow-down scaling experiments, and the (m1, m2)
phase diagram of boundedness predictions.
"""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("conflictlab")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .model import (
    FlowConfig,
    Params,
    RadialField,
    RadialGrid,
    make_grid,
    project_density,
    validate_params,
)

__all__ = [
    "FlowConfig",
    "Params",
    "RadialField",
    "RadialGrid",
    "__version__",
    "make_grid",
    "project_density",
    "validate_params",
]
