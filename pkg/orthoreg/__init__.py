"""
orthoreg

Orthogonality regularizers (SO, SRIP) for encoder weights, eigenspectrum
diagnostics of dimensional collapse, and a desk-scale joint-embedding harness
to compare them with feature whitening.
"""

from orthoreg import constants

__version__ = "0.1.0"

__all__ = ["constants", "__version__"]
