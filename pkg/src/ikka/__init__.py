"""Anomaly-weighted visual servoing: persistence scoring, bounded control, simulation and analysis."""

__version__ = "0.1.0"
