"""Rate regions, optimization and desk-scale simulation for quantum MACs with cribbing encoders."""

__version__ = "0.1.0"
