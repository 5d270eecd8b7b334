"""Topology graphs with room detection for 2D occupancy grid maps."""

__version__ = "0.1.0"
