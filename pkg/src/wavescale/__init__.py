"""Wavelet scaling descriptors for 1-D spectra."""

__version__ = "0.1.0"
