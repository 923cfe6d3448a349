"""Normalized ground states of radial nonlinear Schrodinger equations.

Library layout:
    models   nonlinearity / potential definitions and hypothesis classifiers
    grids    radial grids, quadrature, discrete Laplacian
    energy   functionals, identity residuals, fiber and dilation maps
    flow     constrained gradient-flow minimizer
    oracle   shooting-based reference solutions for pure power nonlinearities
    curves   energy-curve scans, threshold bisection, spectral infimum
    cli      command-line front end
"""

__version__ = "0.1.0"
