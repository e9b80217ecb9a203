"""Numerical laboratory for the stationary nonlocal Fisher-KPP equation.

``0 = Lap u + u (1 - phi_sigma * u)`` on a periodic box approximating R^d.
"""
from .errors import (BlowUpError, DomainTooSmallWarning, GridMismatchError, InputError,
                     KernelAssumptionError, KernelParseError, NLFKPPError, ParameterError)
from .kernel import Kernel, ScaledKernel, fourier_multiplier, load_tabulated, scale, validate
from .spectral import Field, Grid, convolve, dealias, laplacian, read_field, write_field

__version__ = "0.1.0"
