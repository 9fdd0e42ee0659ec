"""Continuous-time quantum snake walks: spectra, wave packets and scattering."""
__version__ = "0.1.0"
