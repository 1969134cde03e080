"""Numerical laboratory for the Allen-Cahn equation started from small,
mollified white noise: spectral solver, tree expansion, Gaussian limit
fields and level-set mean curvature flow."""

__version__ = "0.1.0"
