"""Exact Lipschitz-free space computations on finite pointed metric spaces."""

__version__ = "0.1.0"
