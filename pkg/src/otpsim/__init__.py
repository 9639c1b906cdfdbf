"""Exact simulation of one-time sampling programs and their security games."""

__version__ = "0.1.0"
