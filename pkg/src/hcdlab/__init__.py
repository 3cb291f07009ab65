"""Sub-Finsler Heisenberg group laboratory."""

__version__ = "0.1.0"
