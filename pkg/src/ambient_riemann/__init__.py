"""Numerical Riemannian geometry for manifolds embedded in Euclidean space
with a metric operator."""
__version__ = "0.1.0"
