"""Pseudo-spectral laboratory for the compressible viscoelastic system on a periodic box."""

from .errors import DataFormatError, InputError, SnapshotError, StateError, VDLabError
from .grid import GridSpec
from .symbols import PhysParams
from .state import StateU, make_initial_data, norms

__version__ = "0.1.0"

__all__ = [
    "DataFormatError", "GridSpec", "InputError", "PhysParams", "SnapshotError", "StateError",
    "StateU", "VDLabError", "make_initial_data", "norms",
]
