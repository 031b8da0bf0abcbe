"""Exact verification of Lagrange anchors, conservation laws and characteristic symmetries."""

__version__ = "0.1.0"
