"""Exact verification of K-stability computations for Fano threefolds.

Modules: ``exact`` (rationals, polynomials, matrices), ``lattice``
(intersection forms), ``zariski`` (surface Zariski decompositions),
``stability`` (S- and beta-invariants, flag functionals), ``git`` (torus
Hilbert-Mumford tests), ``geometry`` (quadrics, Jacobians, discriminants)
and ``scenario``/``cli`` (scenario files and reports).
"""

from .exact import PiecewisePoly, Poly, Q, RatMatrix, integrate_piecewise, parse_poly, rational_roots, solve_linear
from .lattice import CurveFunctional, DivisorPath, Restriction, SurfaceLattice, ThreefoldLattice

__version__ = "0.1.0"

__all__ = [
    "CurveFunctional",
    "DivisorPath",
    "PiecewisePoly",
    "Poly",
    "Q",
    "RatMatrix",
    "Restriction",
    "SurfaceLattice",
    "ThreefoldLattice",
    "integrate_piecewise",
    "parse_poly",
    "rational_roots",
    "solve_linear",
]
