"""Spectral triples on fractal curves: spectra, zeta functions, dimensions, metrics."""

__version__ = "0.1.0"
