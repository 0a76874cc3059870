"""Exact inference in discrete Bayesian networks with nested junction trees."""
from nestjt.kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"
