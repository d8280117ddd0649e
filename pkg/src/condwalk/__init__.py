"""Heat-kernel approximations for random walks conditioned to stay nonnegative."""

from .errors import CondWalkError
from .increments import BUILTIN_LAWS, IncrementLaw, LatticeSpec, load_law, make_lattice_law, reverse

__all__ = ["BUILTIN_LAWS", "CondWalkError", "IncrementLaw", "LatticeSpec", "load_law", "make_lattice_law", "reverse"]
__version__ = "0.1.0"
