"""Weighted power variations of fractional Brownian motion at H = 1/4.

Path simulation, variation statistics, their mixed-Gaussian limit laws and a
Monte Carlo experiment harness that checks one against the other.
"""

from .covariance import constant_C14, constant_kappa, covariance_fbm, rho
from .paths import BIFRACTIONAL, FBM, Generator, GridPath, simulate, simulate_batch
from .rng import RngStream
from .testfunctions import TestFunction, catalog, get as get_function

__all__ = [
    "BIFRACTIONAL",
    "FBM",
    "Generator",
    "GridPath",
    "RngStream",
    "TestFunction",
    "catalog",
    "constant_C14",
    "constant_kappa",
    "covariance_fbm",
    "get_function",
    "rho",
    "simulate",
    "simulate_batch",
]

__version__ = "0.1.0"
