"""popboard: a deterministic population-rate blackboard simulator.

The board binds a sequence of typed tokens into a graph of temporal
connection paths (latched gating circuits between content rows and a
relation grid), answers slot queries by content-addressable flow through
the latched paths, and emits per-category activity traces.
"""

from __future__ import annotations

from .config import Config, load_config

__all__ = ["Config", "load_config", "__version__"]

__version__ = "0.1.0"
