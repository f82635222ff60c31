"""Supremum and first-passage laws of spectrally one-sided Levy processes."""

__version__ = "0.1.0"
