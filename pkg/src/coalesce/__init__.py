"""Exact distributions and Monte Carlo checks for Lambda-coalescents, the
fixation line and the lookdown model."""

__version__ = "0.1.0"
