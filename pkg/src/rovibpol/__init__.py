"""Rovibrational polaritons of diatomic molecules in a lossless IR cavity."""

__version__ = "0.1.0"
