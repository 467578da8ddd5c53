"""Numerical checks for boundary regularity of harmonic functions: majorants,
Poisson extension, transversal curve families and Lipschitz-type seminorms."""

__version__ = "0.1.0"
