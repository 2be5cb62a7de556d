"""Exact and numerical verification toolkit for boundary Yamabe blow-up analysis."""

from .scalars import AsymptoticValue, ExactScalar, PiMonomial, sphere_area

__all__ = ["AsymptoticValue", "ExactScalar", "PiMonomial", "sphere_area"]
__version__ = "0.1.0"
