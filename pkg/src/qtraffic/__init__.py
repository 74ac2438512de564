"""Simulator for detecting traffic analysis with split single-particle wave packages."""

__version__ = "0.1.0"
