"""Active-space embedding with exact G0W0 double counting, on finite model Hamiltonians."""

from .units import HARTREE_TO_EV

__all__ = ["HARTREE_TO_EV"]
__version__ = "0.1.0"
