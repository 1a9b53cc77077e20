"""Fault-scenario classification from short industrial alarm sequences."""

__version__ = "0.1.0"
