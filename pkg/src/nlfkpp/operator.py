"""The stationary nonlocal FKPP map ``F(u, sigma) = Lap u + u (1 - phi_sigma * u)``.

``sigma = 0`` is a separate code path in which the convolution is the identity.
Products are dealiased with the 2/3 rule before the Laplacian is added.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainTooSmallWarning, ParameterError
from .kernel import Kernel, scale
from .spectral import TAIL_TOL, Field, require_same_grid


@dataclass(frozen=True, eq=False)
class OperatorParams:
    sigma: float
    kernel: Kernel | None = None

    def __post_init__(self):
        if not (np.isfinite(self.sigma) and self.sigma >= 0):
            raise ParameterError(f"sigma must be >= 0, got {self.sigma}")
        if self.sigma > 0 and self.kernel is None:
            raise ParameterError("a kernel is required for sigma > 0")

    @property
    def local(self):
        return self.sigma == 0

    @property
    def mu_equivalent(self):
        return self.sigma**2

    @property
    def scaled(self):
        return None if self.local else scale(self.kernel, self.sigma)


class StationaryMap:
    """Array-level evaluation of F, its Jacobian action, and the (Lap - 1)^-1 preconditioner.

    Works on raw value arrays of shape ``grid.shape`` and is the fast path used by
    the solvers; the module functions wrap it for :class:`Field` inputs.
    """

    def __init__(self, grid, params):
        self.grid = grid
        self.params = params
        self.flags = ()
        if params.local:
            self.mult = None
        else:
            sk = params.scaled
            tail = sk.tail_mass(grid.L)
            if tail > TAIL_TOL:
                self.flags = ("domain-too-small",)
                warnings.warn(f"kernel tail mass {tail:.2e} beyond L={grid.L}", DomainTooSmallWarning, stacklevel=2)
            self.mult = sk.grid_multiplier(grid)
        self._neg_ksq = -grid.ksq
        self._mask = grid.dealias_mask
        # exact inverse of the discrete Jacobian at u = 1, sigma = 0; equals (Lap - 1)^-1
        # on the retained band and -Lap^-1 on modes the dealiased product cannot reach
        self._pc = 1.0 / (-grid.ksq - self._mask)

    def conv(self, v):
        if self.mult is None:
            return v
        g = self.grid
        return g.ifft(self.mult * g.fft(v))

    def reaction(self, v):
        """Dealiased ``v (1 - phi * v)``."""
        g = self.grid
        return g.ifft(self._mask * g.fft(v * (1.0 - self.conv(v))))

    def residual(self, v):
        g = self.grid
        prod = v * (1.0 - self.conv(v))
        return g.ifft(self._neg_ksq * g.fft(v) + self._mask * g.fft(prod))

    def jacobian(self, v, V, conv_v=None):
        g = self.grid
        cv = self.conv(v) if conv_v is None else conv_v
        prod = (1.0 - cv) * V - v * self.conv(V)
        return g.ifft(self._neg_ksq * g.fft(V) + self._mask * g.fft(prod))

    def precondition(self, r):
        g = self.grid
        return g.ifft(self._pc * g.fft(r))


def residual(u, params):
    m = StationaryMap(u.grid, params)
    return Field(u.grid, m.residual(u.values), warnings=m.flags)


def jacobian_apply(u, params, U):
    """Frechet derivative ``Lap U + (1 - phi*u) U - u (phi*U)``."""
    g = require_same_grid(u, U)
    return Field(g, StationaryMap(g, params).jacobian(u.values, U.values))


def taylor_remainder(u, params):
    """Exact remainder ``-u (phi_sigma * u)`` of the expansion about zero (dealiased)."""
    m = StationaryMap(u.grid, params)
    g = u.grid
    return Field(g, g.ifft(g.dealias_mask * g.fft(-u.values * m.conv(u.values))))


@dataclass(frozen=True, eq=False)
class LinearOperatorTag:
    variant: str
    alpha: float | None = None
    u: Field | None = None
    params: OperatorParams | None = None

    def __post_init__(self):
        if self.variant not in ("L0", "L1", "L0_alpha", "jacobian_at"):
            raise ParameterError(f"unknown linear operator {self.variant!r}")
        if self.variant == "L0_alpha" and not (self.alpha is not None and -1 < self.alpha < 1):
            raise ParameterError(f"alpha must lie in (-1, 1), got {self.alpha}")
        if self.variant == "jacobian_at" and (self.u is None or self.params is None):
            raise ParameterError("jacobian_at needs a base field and parameters")

    @classmethod
    def L0(cls):
        return cls("L0")

    @classmethod
    def L1(cls):
        return cls("L1")

    @classmethod
    def L0_alpha(cls, alpha):
        return cls("L0_alpha", alpha=float(alpha))

    @classmethod
    def jacobian_at(cls, u, params):
        return cls("jacobian_at", u=u, params=params)

    @property
    def shift(self):
        """Zeroth-order coefficient c in ``Lap + c``."""
        return {"L0": 1.0, "L1": -1.0}.get(self.variant, None if self.alpha is None else 1.0 + self.alpha)


def linear_apply(tag, U):
    if tag.variant == "jacobian_at":
        return jacobian_apply(tag.u, tag.params, U)
    g = U.grid
    return Field(g, g.ifft((-g.ksq + tag.shift) * g.fft(U.values)))


def symbol(tag, xi):
    """Fourier symbol ``c - |xi|^2`` of ``Lap + c`` at wavenumber magnitude ``xi``."""
    if tag.variant == "jacobian_at":
        raise ParameterError("the Jacobian at a nonconstant state has no scalar symbol")
    xi = np.asarray(xi, dtype=float)
    return tag.shift - xi**2
