"""Holomorphic dimension, charges and index checks on finite-dimensional quantum systems."""

__version__ = "0.1.0"
