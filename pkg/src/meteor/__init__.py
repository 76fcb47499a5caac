"""Meteor mass-redistribution processes on finite graphs."""

from ._backend import BACKEND
from .graph import (
    Graph,
    RedistributionMatrix,
    build_complete,
    build_cycle,
    build_torus,
    custom_redistribution,
    uniform_redistribution,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Graph",
    "RedistributionMatrix",
    "build_complete",
    "build_cycle",
    "build_torus",
    "custom_redistribution",
    "uniform_redistribution",
]
