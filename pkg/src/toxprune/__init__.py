"""Toxic subword pruning for constrained decoding."""

__version__ = "0.1.0"
