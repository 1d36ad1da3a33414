"""Numerical evaluation of fundamental solutions of non-elliptic homogeneous operators."""

__version__ = "0.1.0"
