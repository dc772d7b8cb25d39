"""Swirl-free bi-rotational Euler flows in R^4: kernels, transport and estimate monitors."""
from .fields import GridSpec, QuadrantPoint, ScalarField  # noqa: F401
