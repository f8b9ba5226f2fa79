"""Numerical laboratory for the cubic oscillator ``-d^2/dx^2 + x^2 + i sqrt(beta) x^3``.

The package computes the spectrum over the cut coupling plane, the exact
Rayleigh-Schroedinger series and its diagonal Pade approximants, the
Stieltjes density on the cut, eigenfunction node counts, and the WKB
geometry of the rescaled problem.
"""

__version__ = "0.1.0"

from .model import CutParameter, Potential, ScalingFrame, make_frame, turning_points

__all__ = [
    "__version__",
    "CutParameter",
    "Potential",
    "ScalingFrame",
    "make_frame",
    "turning_points",
]
