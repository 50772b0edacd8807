"""
atensor - chart-based verification engine for A-tensors, Killing fields and
Berger-type S^1-bundle metrics.
"""

__version__ = "1.0.0"
