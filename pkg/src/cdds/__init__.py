"""Dissipativity and stability analysis of coupled differential-difference
systems with distributed delays."""

__version__ = "0.1.0"
