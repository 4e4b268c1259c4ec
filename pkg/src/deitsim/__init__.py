"""Steady-state simulator for probe gain in a Cs tripod under double EIT."""

__version__ = "0.1.0"
