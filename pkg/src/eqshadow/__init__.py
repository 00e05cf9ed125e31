"""Equatorial-stabilizer shadow tomography: label algebra, simulators, circuits and estimators."""

__version__ = "0.1.0"
