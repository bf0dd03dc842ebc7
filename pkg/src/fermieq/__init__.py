"""Free-fermion equilibration on periodic hypercubic lattices."""

from fermieq.lattice import ConfigError, LatticeConfig, derive, dispersion
from fermieq.kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "ConfigError", "LatticeConfig", "derive", "dispersion"]
