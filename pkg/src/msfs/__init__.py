"""Simulation suite for multi-scale feedback systems.

Two case studies share one harness: hierarchies of delay-coupled Hill-type
oscillators integrated with a method-of-steps DDE solver, and stacked
cellular automata linked by abstraction and goal mappings.
"""

__version__ = "0.1.0"

from .errors import (ConfigError, InsufficientData, IntegrationDiverged, InvalidTopology,  # noqa: F401
                     MsfsError, NonConvergence, OutOfRange)
