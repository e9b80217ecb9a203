"""Polynomially weighted Sobolev norms and convolution inequalities on the grid.

The weight is ``w(x) = (1 + |x|^2)^(-l)``. Integrals use the trapezoidal rule on
the periodic grid (``h^d * sum``) over the truncated box; the mass the box misses
is bounded by ``sup|f|^p * int_{outside} w`` and reported as ``tail_bound``.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import ParameterError
from .spectral import Field, convolve, derivative, require_same_grid


@dataclass(frozen=True)
class WeightedSpaceSpec:
    k: int = 0
    p: float = 2.0
    l: float = 1.0

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 0:
            raise ParameterError(f"derivative order must be a nonnegative integer, got {self.k}")
        if not self.p > 1:
            raise ParameterError(f"integrability exponent must exceed 1, got {self.p}")
        if not self.l > 0.5:
            raise ParameterError(f"weight exponent must exceed 1/2, got {self.l}")


@dataclass(frozen=True)
class XNormSpec:
    """``max(||u||_{k+2,p;w}, ||u||_{k,2p;w})`` with a shared weight exponent."""

    k: int = 0
    p: float = 2.0
    l: float = 1.0

    def __post_init__(self):
        self.inner, self.outer  # validates both components

    @property
    def inner(self):
        return WeightedSpaceSpec(self.k + 2, self.p, self.l)

    @property
    def outer(self):
        return WeightedSpaceSpec(self.k, 2 * self.p, self.l)


DEFAULT_X = XNormSpec()


def _check_l(l, d):
    if not l > d / 2:
        raise ParameterError(f"weight exponent l={l} is not integrable in d={d} (need l > d/2)")


def weight(l, x, d=1):
    """``(1 + |x|^2)^(-l)``; for ``d = 2`` the last axis of ``x`` holds coordinates."""
    _check_l(l, d)
    x = np.asarray(x, dtype=float)
    r2 = x**2 if d == 1 else np.sum(x**2, axis=-1)
    return (1.0 + r2) ** (-l)


def grid_weight(grid, l):
    _check_l(l, grid.d)
    return (1.0 + grid.radius**2) ** (-l)


def weight_integral_outside(l, L, d):
    """``int w`` over the complement of the box ``[-L, L)^d``."""
    _check_l(l, d)
    tail1 = 2 * integrate.quad(lambda s: (1 + s * s) ** (-l), L, np.inf)[0]
    if d == 1:
        return tail1
    # bound: complement of the square lies outside the disc of radius L
    return 2 * math.pi * integrate.quad(lambda r: r * (1 + r * r) ** (-l), L, np.inf)[0]


def weight_integral_box(grid, l):
    return float(grid.cell_volume * np.sum(grid_weight(grid, l)))


@dataclass
class NormReport:
    name: str
    value: float
    tail_bound: float

    def to_json(self):
        return json.dumps({"name": self.name, "value": self.value, "tail_bound": self.tail_bound})


def _lp_integral(values, grid, p, l):
    return grid.cell_volume * float(np.sum(np.abs(values) ** p * grid_weight(grid, l)))


def weighted_lp_norm(u, p=2.0, l=1.0):
    """``(int |u|^p w dx)^(1/p)`` over the box."""
    if not p >= 1:
        raise ParameterError(f"p must be >= 1, got {p}")
    return _lp_integral(u.values, u.grid, p, l) ** (1.0 / p)


def multi_indices(d, k):
    """All multi-indices of order at most ``k``."""
    return [a for a in itertools.product(range(k + 1), repeat=d) if sum(a) <= k]


def weighted_sobolev_norm(u, spec=WeightedSpaceSpec()):
    total = sum(_lp_integral(derivative(u, a).values, u.grid, spec.p, spec.l)
                for a in multi_indices(u.grid.d, spec.k))
    return total ** (1.0 / spec.p)


def x_norm(u, spec=DEFAULT_X):
    return max(weighted_sobolev_norm(u, spec.inner), weighted_sobolev_norm(u, spec.outer))


def tail_bound(u, spec):
    """Upper bound on the part of the norm's p-th power that lies outside the box."""
    g = u.grid
    sups = [derivative(u, a).sup_norm for a in multi_indices(g.d, spec.k)]
    return sum(s**spec.p for s in sups) * weight_integral_outside(spec.l, g.L, g.d)


def norm_report(u, spec, name=None):
    name = name or f"W^{{{spec.k},{spec.p:g}}}(l={spec.l:g})"
    return NormReport(name, weighted_sobolev_norm(u, spec), tail_bound(u, spec))


def young_check(sk, u, p=2.0, l=1.0):
    """Ratio ``||phi_sigma * u||_{p;w} / ||u||_{p;w}``."""
    base = weighted_lp_norm(u, p, l)
    if base == 0:
        raise ParameterError("young_check ratio undefined for a zero field")
    return weighted_lp_norm(convolve(sk, u), p, l) / base


def young_constant(sk, grid, p=2.0, l=1.0):
    """``(max (phi_sigma * w) / w)^(1/p)`` on the grid.

    By Jensen, ``||phi_sigma * u||_{p;w}^p <= int |u|^p (phi_sigma * w)``, so this
    bounds :func:`young_check` for every field. It exceeds 1 whenever convolution
    lifts the weight somewhere, which polynomial weights always allow.
    """
    w = grid_weight(grid, l)
    return float(np.max(convolve(sk, Field(grid, w)).values / w)) ** (1.0 / p)


def mollifier_convergence(kernel, u, p, l, sigmas):
    """``||phi_sigma * u - u||_{p;w}`` for each sigma of a strictly decreasing list."""
    from .kernel import scale

    sigmas = [float(s) for s in sigmas]
    if any(s <= 0 for s in sigmas) or any(b >= a for a, b in zip(sigmas, sigmas[1:])):
        raise ParameterError("sigmas must be positive and strictly decreasing")
    return np.array([weighted_lp_norm(convolve(scale(kernel, s), u) - u, p, l) for s in sigmas])


def loglog_slope(sigmas, errors):
    """Least-squares slope of log(error) against log(sigma)."""
    return float(np.polyfit(np.log(sigmas), np.log(errors), 1)[0])


def norm_ordering_check(u, k=0, p=2.0, l_x=1.0, l_y=1.0):
    """``(||u||_{k,p;w_Y}, ||u||_{k,p;w_X})`` for ``l_X <= l_Y``."""
    if l_x > l_y:
        raise ParameterError(f"need l_X <= l_Y, got {l_x} > {l_y}")
    a = weighted_sobolev_norm(u, WeightedSpaceSpec(k, p, l_y))
    b = weighted_sobolev_norm(u, WeightedSpaceSpec(k, p, l_x))
    return a, b


def embedding_constant(grid, spec=DEFAULT_X):
    """``C`` with ``x_norm(u) <= C * max(|u| + |grad u| + |D^2 u|)`` on the grid.

    Each component norm sums at most ``N`` derivative terms, each bounded by the
    pointwise maximum times the box weight integral.
    """
    W = weight_integral_box(grid, spec.l)
    consts = []
    for comp in (spec.inner, spec.outer):
        count = len(multi_indices(grid.d, comp.k))
        consts.append((count * W) ** (1.0 / comp.p))
    return max(consts)


def c2_magnitude(u):
    """Grid max of ``|u| + |grad u| + |D^2 u|`` (Euclidean/Frobenius norms)."""
    g = u.grid
    grad2 = sum(derivative(u, a).values ** 2 for a in multi_indices(g.d, 1) if sum(a) == 1)
    hess2 = 0.0
    for i in range(g.d):
        for j in range(g.d):
            a = [0] * g.d
            a[i] += 1
            a[j] += 1
            hess2 = hess2 + derivative(u, a).values ** 2
    return float(np.max(np.abs(u.values) + np.sqrt(grad2) + np.sqrt(hess2)))


def remainder_bound(u, sk, p=2.0, l_x=1.0, l_y=1.0):
    """``(||u (phi_sigma * u)||_{p;w_Y}, ||u||_{2p;w_X}^2)``; ``sk=None`` is the local case."""
    conv = u if sk is None else convolve(sk, u)
    prod = Field(u.grid, u.values * conv.values)
    require_same_grid(u, conv)
    return weighted_lp_norm(prod, p, l_y), weighted_lp_norm(u, 2 * p, l_x) ** 2
