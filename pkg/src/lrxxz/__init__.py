"""Boundary-driven XXZ chains with power-law Ising interaction.

Exact Lindblad evolution for small chains, Monte Carlo wave-function
trajectories for larger ones, and the analysis of steady-state transport
(power-law fits, saturation, negative differential conductivity).
"""

__version__ = "0.1.0"

from .model import ChainConfig, coupling_table, weighing_constant  # noqa: E402

__all__ = ["ChainConfig", "coupling_table", "weighing_constant"]
