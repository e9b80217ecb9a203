"""Periodic box discretization of R^d with transform-based Laplacian and convolution.

The box is ``[-L, L)^d`` with ``n`` points per dimension, ``h = 2L/n`` and
wavenumbers ``xi_j = pi j / L``. Transforms use the real FFT layout (last axis
halved), so fields are real arrays of shape ``(n,) * d``.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import DomainTooSmallWarning, GridMismatchError, InputError, ParameterError

TAIL_TOL = 1e-8


@dataclass(frozen=True)
class Grid:
    d: int
    L: float
    n: int

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ParameterError(f"grid dimension must be 1 or 2, got {self.d}")
        if not (self.L > 0 and math.isfinite(self.L)):
            raise ParameterError(f"half width must be positive, got {self.L}")
        if self.n < 4 or self.n & (self.n - 1):
            raise ParameterError(f"points per dimension must be a power of two >= 4, got {self.n}")
        object.__setattr__(self, "L", float(self.L))

    @property
    def h(self):
        return 2 * self.L / self.n

    @property
    def shape(self):
        return (self.n,) * self.d

    @property
    def cell_volume(self):
        return self.h**self.d

    @property
    def volume(self):
        return (2 * self.L) ** self.d

    @cached_property
    def x(self):
        """Per-dimension coordinate vectors."""
        xs = -self.L + self.h * np.arange(self.n)
        return (xs,) * self.d

    @cached_property
    def coords(self):
        """Point coordinates, shape ``shape`` (d=1) or ``shape + (2,)`` (d=2)."""
        if self.d == 1:
            return self.x[0]
        return np.stack(np.meshgrid(*self.x, indexing="ij"), axis=-1)

    @cached_property
    def radius(self):
        if self.d == 1:
            return np.abs(self.x[0])
        return np.sqrt(np.sum(self.coords**2, axis=-1))

    @cached_property
    def _mode_index(self):
        full = np.fft.fftfreq(self.n, 1.0 / self.n)
        half = np.arange(self.n // 2 + 1, dtype=float)
        if self.d == 1:
            return (half,)
        return np.meshgrid(full, half, indexing="ij")

    @cached_property
    def wavevectors(self):
        """Wavenumbers in real-FFT layout (trailing axis of size 2 in d=2)."""
        k = [(np.pi / self.L) * j for j in self._mode_index]
        if self.d == 1:
            return k[0]
        return np.stack(k, axis=-1)

    @cached_property
    def ksq(self):
        if self.d == 1:
            return self.wavevectors**2
        return np.sum(self.wavevectors**2, axis=-1)

    @cached_property
    def dealias_mask(self):
        keep = np.ones(self._mode_index[0].shape, dtype=bool)
        for j in self._mode_index:
            keep &= np.abs(j) <= self.n / 3
        return keep

    @cached_property
    def nyquist_mask(self):
        """True on modes carrying a Nyquist index in any dimension."""
        mask = np.zeros(self._mode_index[0].shape, dtype=bool)
        for j in self._mode_index:
            mask |= np.abs(j) == self.n // 2
        return mask

    def fft(self, values):
        return np.fft.rfftn(values)

    def ifft(self, coeffs):
        return np.fft.irfftn(coeffs, s=self.shape, axes=tuple(range(self.d)))

    def field(self, values):
        return Field(self, values)

    def zeros(self):
        return Field(self, np.zeros(self.shape))

    def constant(self, c):
        return Field(self, np.full(self.shape, float(c)))

    def from_function(self, f):
        """Field with values ``f(x)`` (d=1) or ``f(x1, x2)`` (d=2)."""
        if self.d == 1:
            return Field(self, np.broadcast_to(f(self.x[0]), self.shape).astype(float))
        x1, x2 = np.meshgrid(*self.x, indexing="ij")
        return Field(self, np.broadcast_to(f(x1, x2), self.shape).astype(float))

    def wavenumber(self, j):
        return math.pi * j / self.L

    def snap_wavenumber(self, k):
        """Nearest grid wavenumber to ``k`` and its index."""
        j = int(round(k * self.L / math.pi))
        return self.wavenumber(j), j

    def refine(self, factor=2):
        return Grid(self.d, self.L, self.n * factor)


@dataclass(frozen=True, eq=False)
class Field:
    """Real grid function; arithmetic requires identical grids."""

    grid: Grid
    values: np.ndarray
    warnings: tuple = field(default=(), compare=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.grid.shape:
            raise InputError(f"values of shape {vals.shape} do not fit grid shape {self.grid.shape}")
        if not np.all(np.isfinite(vals)):
            raise InputError("field values must be finite")
        object.__setattr__(self, "values", vals)

    def _other(self, other):
        if isinstance(other, Field):
            if other.grid != self.grid:
                raise GridMismatchError(f"grid mismatch: {self.grid} vs {other.grid}")
            return other.values
        return other

    def __add__(self, other):
        return Field(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return Field(self.grid, self.values - self._other(other))

    def __rsub__(self, other):
        return Field(self.grid, self._other(other) - self.values)

    def __mul__(self, other):
        return Field(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __neg__(self):
        return Field(self.grid, -self.values)

    def __truediv__(self, c):
        return Field(self.grid, self.values / c)

    @property
    def sup_norm(self):
        return float(np.max(np.abs(self.values)))

    @property
    def min(self):
        return float(self.values.min())

    @property
    def max(self):
        return float(self.values.max())

    @property
    def mean(self):
        return float(self.values.mean())

    def l2_distance(self, other):
        """Grid L2 distance ``sqrt(h^d sum (u - v)^2)``."""
        diff = self.values - self._other(other)
        return float(math.sqrt(self.grid.cell_volume * np.sum(diff**2)))

    def allclose(self, other, atol=1e-12, rtol=0.0):
        return bool(np.allclose(self.values, self._other(other), atol=atol, rtol=rtol))


def require_same_grid(*fields):
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid != g:
            raise GridMismatchError(f"grid mismatch: {g} vs {f.grid}")
    return g


def laplacian(u):
    g = u.grid
    return Field(g, g.ifft(-g.ksq * g.fft(u.values)))


def derivative(u, alpha):
    """Spectral partial derivative for the multi-index ``alpha``.

    Odd orders drop the Nyquist mode, whose derivative is not real.
    """
    g = u.grid
    alpha = tuple(alpha)
    if len(alpha) != g.d:
        raise ParameterError(f"multi-index {alpha} does not match d={g.d}")
    if sum(alpha) == 0:
        return u
    coeffs = g.fft(u.values)
    k = g.wavevectors if g.d > 1 else g.wavevectors[..., None]
    sym = np.ones(coeffs.shape, dtype=complex)
    odd = False
    for axis, order in enumerate(alpha):
        if order:
            sym = sym * (1j * k[..., axis]) ** order
            odd |= order % 2 == 1
    if odd:
        sym = np.where(g.nyquist_mask, 0.0, sym)
    return Field(g, g.ifft(sym * coeffs))


def convolve(sk, u, tail_tol=TAIL_TOL):
    """``phi_sigma * u`` through the kernel multiplier.

    When the kernel mass beyond the box half-width exceeds ``tail_tol`` the result
    carries a ``"domain-too-small"`` flag and a :class:`DomainTooSmallWarning` is issued.
    """
    g = u.grid
    flags = ()
    tail = sk.tail_mass(g.L)
    if tail > tail_tol:
        flags = ("domain-too-small",)
        warnings.warn(f"kernel tail mass {tail:.2e} beyond L={g.L}", DomainTooSmallWarning, stacklevel=2)
    mult = sk.grid_multiplier(g)
    out = g.ifft(mult * g.fft(u.values))
    return Field(g, out, warnings=flags)


def dealias(u):
    """2/3-rule truncation: zero modes with any index magnitude above n/3."""
    g = u.grid
    return Field(g, g.ifft(np.where(g.dealias_mask, g.fft(u.values), 0.0)))


# -- snapshots -------------------------------------------------------------

def write_field(path, u):
    """One JSON header line ``{d, L, n}`` followed by little-endian float64 values."""
    header = json.dumps({"d": u.grid.d, "L": u.grid.L, "n": u.grid.n}) + "\n"
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(np.ascontiguousarray(u.values, dtype="<f8").tobytes())


def read_field(path):
    with open(path, "rb") as fh:
        header = fh.readline()
        payload = fh.read()
    try:
        meta = json.loads(header)
        grid = Grid(int(meta["d"]), float(meta["L"]), int(meta["n"]))
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError(f"{path}: bad field header: {exc}") from None
    expected = grid.n**grid.d
    if len(payload) != 8 * expected:
        raise InputError(f"{path}: expected {8 * expected} payload bytes, found {len(payload)}")
    vals = np.frombuffer(payload, dtype="<f8")
    return Field(grid, vals.reshape(grid.shape).astype(float))


def write_field_csv(path, u):
    """CSV with coordinate columns (x or x1,x2) followed by the value."""
    g = u.grid
    if g.d == 1:
        cols = [g.x[0], u.values]
        header = "x,value"
    else:
        c = g.coords.reshape(-1, 2)
        cols = [c[:, 0], c[:, 1], u.values.reshape(-1)]
        header = "x1,x2,value"
    data = np.column_stack(cols)
    Path(path).write_text(header + "\n" + "\n".join(",".join(repr(float(v)) for v in row) for row in data) + "\n")
