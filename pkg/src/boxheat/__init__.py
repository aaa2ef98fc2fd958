"""Numerical study of weighted heat kernels on polynomial model domains."""
__version__ = "0.1.0"
