"""Parametric bicycle design evaluation, scoring and optimization baselines."""

__version__ = "0.1.0"
