"""Convolution kernels: nonnegative mass-one densities, their scaling and transforms.

A :class:`Kernel` is an unscaled density ``phi`` on R^d. :func:`scale` attaches a
width ``sigma`` and gives ``phi_sigma(x) = sigma**-d * phi(x / sigma)``.

Fourier multipliers use the non-unitary convention
``phi_hat(xi) = int phi(x) exp(-i xi.x) dx`` so that ``phi_hat(0)`` equals the mass.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import integrate

from .errors import KernelAssumptionError, KernelParseError, ParameterError

FAMILIES = ("gaussian", "laplace", "tophat", "tabulated")

#: relative quadrature tolerance used by :func:`validate`
VALIDATION_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class Kernel:
    """Unscaled convolution density.

    Closed-form families are separable products of 1D profiles in ``d = 2``.
    Tabulated kernels are one dimensional and interpolate linearly between samples
    (zero outside the table).
    """

    family: str
    d: int = 1
    table_x: np.ndarray | None = field(default=None, repr=False)
    table_phi: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterError(f"unknown kernel family {self.family!r}")
        if self.d not in (1, 2):
            raise ParameterError(f"kernel dimension must be 1 or 2, got {self.d}")
        if self.family == "tabulated":
            if self.d != 1:
                raise ParameterError("tabulated kernels are one dimensional")
            if self.table_x is None or self.table_phi is None:
                raise ParameterError("tabulated kernel needs samples")

    @classmethod
    def gaussian(cls, d=1):
        return cls("gaussian", d)

    @classmethod
    def laplace(cls, d=1):
        return cls("laplace", d)

    @classmethod
    def tophat(cls, d=1):
        return cls("tophat", d)

    @classmethod
    def tabulated(cls, x, phi, renormalize=False):
        """Kernel from samples ``phi(x)`` on an increasing abscissa.

        With ``renormalize`` the samples are divided by their trapezoidal mass.
        """
        x = np.asarray(x, dtype=float)
        phi = np.asarray(phi, dtype=float)
        if x.ndim != 1 or x.shape != phi.shape or x.size < 2:
            raise ParameterError("tabulated kernel needs matching 1D sample arrays")
        if np.any(np.diff(x) <= 0):
            raise ParameterError("tabulated abscissae must be strictly increasing")
        if renormalize:
            phi = phi / integrate.trapezoid(phi, x)
        x.setflags(write=False)
        phi.setflags(write=False)
        return cls("tabulated", 1, x, phi)

    @property
    def has_closed_form(self):
        return self.family != "tabulated"

    def _profile(self, s):
        # 1D density of one coordinate
        s = np.asarray(s, dtype=float)
        if self.family == "gaussian":
            return np.exp(-0.5 * s**2) / math.sqrt(2 * math.pi)
        if self.family == "laplace":
            return 0.5 * np.exp(-np.abs(s))
        if self.family == "tophat":
            return np.where(np.abs(s) <= 0.5, 1.0, 0.0)
        return np.interp(s, self.table_x, self.table_phi, left=0.0, right=0.0)

    def _profile_hat(self, z):
        z = np.asarray(z, dtype=float)
        if self.family == "gaussian":
            return np.exp(-0.5 * z**2)
        if self.family == "laplace":
            return 1.0 / (1.0 + z**2)
        if self.family == "tophat":
            # np.sinc(t) = sin(pi t) / (pi t)
            return np.sinc(z / (2 * np.pi))
        return _table_transform(self.table_x, self.table_phi, z)

    def evaluate(self, x):
        """Density at ``x``; for ``d = 2`` the last axis holds the coordinates."""
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)):
            raise ParameterError("kernel evaluated at a non-finite point")
        if self.d == 1:
            return self._profile(x)
        if x.shape[-1] != 2:
            raise ParameterError("2D kernel expects points with a trailing axis of size 2")
        return self._profile(x[..., 0]) * self._profile(x[..., 1])

    def multiplier(self, xi):
        """Fourier multiplier ``phi_hat(xi)``; ``xi`` as in :meth:`evaluate`."""
        xi = np.asarray(xi, dtype=float)
        if self.d == 1:
            return self._profile_hat(xi)
        return self._profile_hat(xi[..., 0]) * self._profile_hat(xi[..., 1])

    def tail_mass(self, radius):
        """Mass outside the cube ``[-radius, radius]^d``."""
        if self.family == "gaussian":
            inside = math.erf(radius / math.sqrt(2))
        elif self.family == "laplace":
            inside = -math.expm1(-radius)
        elif self.family == "tophat":
            inside = 1.0 if radius >= 0.5 else 2 * radius
        else:
            x, phi = self.table_x, self.table_phi
            total = integrate.trapezoid(phi, x)
            mask = np.abs(x) <= radius
            inside = integrate.trapezoid(phi[mask], x[mask]) / total if mask.sum() > 1 else 0.0
        return max(0.0, 1.0 - inside**self.d)


def _table_transform(x, phi, z):
    # trapezoidal quadrature of int phi(x) exp(-i z x) dx
    wts = np.empty_like(x)
    dx = np.diff(x)
    wts[0] = dx[0] / 2
    wts[-1] = dx[-1] / 2
    wts[1:-1] = (dx[:-1] + dx[1:]) / 2
    wphi = wts * phi
    z = np.asarray(z, dtype=float)
    flat = z.reshape(-1)
    out = np.empty(flat.shape, dtype=complex)
    for start in range(0, flat.size, 256):
        chunk = flat[start:start + 256]
        out[start:start + 256] = np.exp(-1j * np.outer(chunk, x)) @ wphi
    out = out.reshape(z.shape)
    if np.max(np.abs(out.imag), initial=0.0) <= 1e-12 * max(1.0, np.max(np.abs(out.real), initial=0.0)):
        return out.real
    return out


def load_tabulated(path, renormalize=False):
    """Read a two-column ``x,phi`` CSV into a tabulated kernel."""
    text = Path(path).read_text()
    return parse_tabulated(text, renormalize=renormalize, source=str(path))


def parse_tabulated(text, renormalize=False, source="<string>"):
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows or [c.strip() for c in rows[0]] != ["x", "phi"]:
        raise KernelParseError(f"{source}: line 1: expected header 'x,phi'", line=1)
    xs, phis = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2:
            raise KernelParseError(f"{source}: line {lineno}: expected 2 columns, got {len(row)}", line=lineno)
        try:
            xv, pv = float(row[0]), float(row[1])
        except ValueError:
            raise KernelParseError(f"{source}: line {lineno}: non-numeric value", line=lineno) from None
        if not (math.isfinite(xv) and math.isfinite(pv)):
            raise KernelParseError(f"{source}: line {lineno}: non-finite value", line=lineno)
        xs.append(xv)
        phis.append(pv)
    if len(xs) < 2:
        raise KernelParseError(f"{source}: need at least two samples", line=len(rows))
    try:
        return Kernel.tabulated(xs, phis, renormalize=renormalize)
    except ParameterError as exc:
        raise KernelParseError(f"{source}: {exc}", line=len(rows)) from None


@dataclass(frozen=True, eq=False)
class ScaledKernel:
    """``phi_sigma(x) = sigma**-d phi(x / sigma)``; ``sigma**2`` is exposed as ``mu``."""

    base: Kernel
    sigma: float

    @property
    def d(self):
        return self.base.d

    @property
    def mu(self):
        return self.sigma**2

    def evaluate(self, x):
        return self.base.evaluate(np.asarray(x, dtype=float) / self.sigma) / self.sigma**self.d

    def multiplier(self, xi):
        return self.base.multiplier(self.sigma * np.asarray(xi, dtype=float))

    def tail_mass(self, half_width):
        return self.base.tail_mass(half_width / self.sigma)

    def grid_multiplier(self, grid):
        """Multiplier sampled on the wavenumbers of ``grid`` (real-FFT layout)."""
        return _grid_multiplier(self, grid)


@lru_cache(maxsize=64)
def _grid_multiplier(sk, grid):
    if sk.base.has_closed_form:
        mult = sk.base.multiplier(sk.sigma * grid.wavevectors)
        return np.ascontiguousarray(mult)
    # tabulated: sample on the grid, renormalize to discrete mass one, transform
    samples = sk.evaluate(grid.x[0])
    mass = samples.sum() * grid.h
    if mass <= 0:
        raise KernelAssumptionError(["kernel has no mass on the grid"])
    samples = np.fft.ifftshift(samples / mass)
    mult = np.fft.rfft(samples) * grid.h
    if np.max(np.abs(mult.imag)) <= 1e-12:
        mult = mult.real
    return mult


def scale(kernel, sigma):
    """Attach the width ``sigma > 0``; ``sigma = 0`` belongs to the local code path."""
    if not (np.isfinite(sigma) and sigma > 0):
        raise ParameterError(f"sigma must be positive, got {sigma}")
    return ScaledKernel(kernel, float(sigma))


def fourier_multiplier(sk, xi):
    """``phi_hat(sigma xi)`` for a scaled kernel."""
    return sk.multiplier(xi)


@dataclass
class ValidationReport:
    family: str
    nonnegative: bool
    mass: float
    mass_error: float
    second_moment: float
    passed: bool
    failed: list = field(default_factory=list)


def _moments_1d(kernel):
    """Mass and second moment of the 1D profile."""
    prof = kernel._profile
    opts = dict(epsabs=1e-13, epsrel=1e-12, limit=200)
    if kernel.family == "tabulated":
        x, phi = kernel.table_x, kernel.table_phi
        return integrate.trapezoid(phi, x), integrate.trapezoid(x**2 * phi, x)
    if kernel.family == "tophat":
        lo, hi = -0.5, 0.5
        mass = integrate.quad(prof, lo, hi, **opts)[0]
        m2 = integrate.quad(lambda s: s**2 * prof(s), lo, hi, **opts)[0]
        return mass, m2
    mass = 2 * integrate.quad(prof, 0, np.inf, **opts)[0]
    m2 = 2 * integrate.quad(lambda s: s**2 * prof(s), 0, np.inf, **opts)[0]
    return mass, m2


def validate(kernel, tol=VALIDATION_TOL, raise_on_fail=True, n_probe=2001):
    """Check nonnegativity, unit mass, and report ``int |x|^2 phi``.

    The second moment is ``inf`` when the quadrature does not settle.
    """
    failed = []
    if kernel.family == "tabulated":
        probe = kernel.table_phi
    else:
        s = np.linspace(-20.0, 20.0, n_probe)
        probe = kernel._profile(s)
    nonneg = bool(np.all(probe >= 0))
    if not nonneg:
        failed.append("nonnegativity: negative density sample")
    mass1, m2_1 = _moments_1d(kernel)
    mass = mass1**kernel.d
    # E|x|^2 = sum over coordinates
    second = kernel.d * m2_1 * mass1 ** (kernel.d - 1)
    if not np.isfinite(second):
        second = math.inf
    mass_error = abs(mass - 1.0)
    if mass_error > tol:
        failed.append(f"unit mass: |mass - 1| = {mass_error:.3e} > {tol:.1e}")
    report = ValidationReport(kernel.family, nonneg, mass, mass_error, second, not failed, failed)
    if failed and raise_on_fail:
        raise KernelAssumptionError(failed, report=report)
    return report

