"""Branches in sigma, the (sigma, ||u||_X) diagram, and the dispersion relation at u = 1.

Linearizing the evolution ``u_t = Lap u + u (1 - phi_sigma * u)`` about ``u = 1``
gives the growth rate ``lambda(xi) = -|xi|^2 - phi_hat(sigma xi)``. This relation is
an analysis choice of this package; it is used to locate the onset ``sigma*``
beyond which ``u = 1`` loses stability.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .errors import ParameterError
from .krylov import gmres
from .norms import DEFAULT_X, x_norm
from .operator import OperatorParams, StationaryMap
from .spectral import Field
from .steady import SolverConfig, Thresholds, classify, deflated_search, newton_solve


# -- dispersion -------------------------------------------------------------

@dataclass
class DispersionCurve:
    sigma: float
    xi: np.ndarray
    lam: np.ndarray
    max_lambda: float
    argmax_xi: float

    @property
    def samples(self):
        return list(zip(self.xi.tolist(), self.lam.tolist()))


def growth_rate(sigma, kernel, xi):
    """``-xi^2 - Re phi_hat(sigma xi)`` along the first coordinate axis."""
    xi = np.asarray(xi, dtype=float)
    if sigma == 0:
        return -(xi**2) - 1.0
    if kernel.d == 1:
        mult = kernel.multiplier(sigma * xi)
    else:
        mult = kernel.multiplier(np.stack([sigma * xi, np.zeros_like(xi)], axis=-1))
    return -(xi**2) - np.real(mult)


def dispersion(sigma, kernel, xi_max=4.0, n_samples=4001):
    """Sample the growth rate on ``[0, xi_max]`` and locate its maximum.

    The scan maximum is polished with a bounded scalar search between the
    neighbouring samples.
    """
    if n_samples < 3 or xi_max <= 0:
        raise ParameterError("need xi_max > 0 and at least 3 samples")
    xi = np.linspace(0.0, xi_max, n_samples)
    lam = growth_rate(sigma, kernel, xi)
    i = int(np.argmax(lam))
    best_xi, best = float(xi[i]), float(lam[i])
    if 0 < i < n_samples - 1:
        res = optimize.minimize_scalar(lambda s: -float(growth_rate(sigma, kernel, s)),
                                       bounds=(xi[i - 1], xi[i + 1]), method="bounded",
                                       options={"xatol": 1e-12})
        if -res.fun > best:
            best_xi, best = float(res.x), float(-res.fun)
    return DispersionCurve(float(sigma), xi, lam, best, best_xi)


def max_growth(sigma, kernel, xi_max=4.0, n_samples=4001):
    return dispersion(sigma, kernel, xi_max, n_samples).max_lambda


def find_sigma_star(kernel, lo=0.0, hi=None, xtol=1e-10, xi_max=4.0, n_samples=4001, hi_limit=1e3):
    """Onset width where the maximal growth rate crosses zero, by bisection.

    Returns ``None`` when no positive growth is found up to ``hi_limit``.
    """
    f = lambda s: max_growth(s, kernel, xi_max, n_samples)
    if f(lo) >= 0:
        raise ParameterError(f"u = 1 is already unstable at sigma={lo}")
    if hi is None:
        hi = max(2 * lo, 1.0)
        while f(hi) <= 0:
            hi *= 2
            if hi > hi_limit:
                return None
    elif f(hi) <= 0:
        return None
    return float(optimize.bisect(f, lo, hi, xtol=xtol))


# -- continuation -----------------------------------------------------------

@dataclass(frozen=True)
class StepConfig:
    ds: float = 0.05
    ds_min: float = 1e-6
    ds_max: float = 0.5
    grow: float = 1.3
    shrink: float = 0.5
    fast_iterations: int = 3
    max_corrector: int = 12
    max_points: int = 200


@dataclass
class BranchPoint:
    sigma: float
    u: Field
    x_norm: float
    sup_norm: float
    min_value: float
    stability_indicator: float
    classification: str
    arclength: float = 0.0


@dataclass
class Branch:
    points: list
    reason: str

    @property
    def sigmas(self):
        return np.array([p.sigma for p in self.points])

    @property
    def x_norms(self):
        return np.array([p.x_norm for p in self.points])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(DIAGRAM_HEADER + ["arclength"])
            for p in self.points:
                w.writerow([repr(p.sigma), p.classification]
                           + [repr(float(v)) for v in (p.x_norm, p.sup_norm, p.min_value, p.stability_indicator,
                                                       p.arclength)])


def _multiplier(grid, kernel, sigma):
    if sigma == 0:
        return None
    return StationaryMap(grid, OperatorParams(sigma, kernel)).mult


def _f_sigma(grid, kernel, v, sigma, eps=1e-6):
    """d F / d sigma by central differences of the multiplier (one-sided at 0)."""
    one = np.ones(grid.ksq.shape)
    lo = max(sigma - eps, 0.0)
    hi = sigma + eps
    m_hi = _multiplier(grid, kernel, hi)
    m_lo = _multiplier(grid, kernel, lo)
    m_lo = one if m_lo is None else m_lo
    dmult = (m_hi - m_lo) / (hi - lo)
    vh = grid.fft(v)
    dconv = grid.ifft(dmult * vh)
    return grid.ifft(grid.dealias_mask * grid.fft(-v * dconv))


class _Arclength:
    def __init__(self, grid, kernel, cfg):
        self.g = grid
        self.kernel = kernel
        self.cfg = cfg
        self.dv = grid.cell_volume

    def dot(self, a, b):
        return self.dv * float(np.sum(a[0] * b[0])) + a[1] * b[1]

    def normalize(self, t):
        nrm = math.sqrt(self.dot(t, t))
        return (t[0] / nrm, t[1] / nrm)

    def tangent(self, v, sigma, prev=None, direction=1.0):
        m = StationaryMap(self.g, OperatorParams(sigma, self.kernel))
        cv = m.conv(v)
        fs = _f_sigma(self.g, self.kernel, v, sigma)
        sol = gmres(lambda V: m.jacobian(v, V, cv), -fs, tol=1e-10, maxiter=self.cfg.max_krylov,
                    precondition=m.precondition, atol=1e-14)
        t = self.normalize((sol.x, 1.0))
        ref = prev if prev is not None else (np.zeros_like(v), direction)
        if self.dot(t, ref) < 0:
            t = (-t[0], -t[1])
        return t

    def correct(self, vp, sp, t, max_it):
        """Newton on ``F = 0`` plus the arclength hyperplane through the predictor."""
        g = self.g
        v, s = vp.copy(), sp
        n = v.size
        for it in range(1, max_it + 1):
            if s < 0:
                return None, None, it
            m = StationaryMap(g, OperatorParams(s, self.kernel))
            F = m.residual(v)
            N = self.dot(t, (v - vp, s - sp))
            if np.max(np.abs(F)) <= self.cfg.newton_tol and abs(N) <= self.cfg.newton_tol:
                return v, s, it - 1
            cv = m.conv(v)
            fs = _f_sigma(g, self.kernel, v, s)

            def apply(z):
                V = z[:n].reshape(v.shape)
                top = m.jacobian(v, V, cv) + fs * z[n]
                bottom = self.dv * float(np.sum(t[0] * V)) + t[1] * z[n]
                return np.concatenate([top.ravel(), [bottom]])

            def prec(z):
                return np.concatenate([m.precondition(z[:n].reshape(v.shape)).ravel(), [z[n]]])

            rhs = -np.concatenate([F.ravel(), [N]])
            sol = gmres(apply, rhs, tol=self.cfg.krylov_tol, maxiter=self.cfg.max_krylov, precondition=prec)
            v = v + sol.x[:n].reshape(v.shape)
            s = s + sol.x[n]
            if not np.all(np.isfinite(v)):
                return None, None, it
        return None, None, max_it


def _point(u, sigma, kernel, s_len, xspec, thresholds):
    return BranchPoint(
        sigma=float(sigma), u=u, x_norm=float(x_norm(u, xspec)), sup_norm=u.sup_norm, min_value=u.min,
        stability_indicator=max_growth(sigma, kernel) if kernel is not None or sigma == 0 else float("nan"),
        classification=classify(u, thresholds), arclength=float(s_len),
    )


def continue_branch(start, sigma_range, kernel, step_cfg=StepConfig(), cfg=SolverConfig(), direction=None,
                    xspec=DEFAULT_X, thresholds=Thresholds()):
    """Pseudo-arclength continuation of a converged root across ``sigma_range``.

    The step halves on corrector failure and grows by ``step_cfg.grow`` after
    fast convergence; every accepted point is re-solved by :func:`newton_solve`
    at fixed sigma. Continuation heads toward the far end of ``sigma_range``
    unless ``direction`` (+1 or -1) is given.
    """
    if not start.converged:
        raise ParameterError("continuation needs a converged start")
    lo, hi = sorted(float(s) for s in sigma_range)
    if lo < 0:
        raise ParameterError("sigma range must be nonnegative")
    if direction is None:
        direction = 1.0 if abs(hi - start.sigma) >= abs(start.sigma - lo) else -1.0
    target = hi if direction > 0 else lo
    g = start.u.grid
    arc = _Arclength(g, kernel, cfg)
    points = [_point(start.u, start.sigma, kernel, 0.0, xspec, thresholds)]
    v, s = start.u.values.copy(), float(start.sigma)
    t = arc.tangent(v, s, direction=direction)
    ds = step_cfg.ds
    s_len = 0.0
    reason = "max points"
    while len(points) < step_cfg.max_points:
        if abs(s - target) <= 1e-12:
            reason = "reached end"
            break
        vp, sp = v + ds * t[0], s + ds * t[1]
        crossed = (sp - target) * direction > 0
        if crossed:
            # land exactly on the end of the range
            frac = (target - s) / (sp - s) if sp != s else 1.0
            vp, sp = v + frac * (vp - v), target
            u_end = newton_solve(Field(g, vp), target, kernel, cfg, xspec=xspec, thresholds=thresholds)
            if u_end.converged:
                s_len += math.sqrt(arc.dot((u_end.u.values - v, target - s), (u_end.u.values - v, target - s)))
                points.append(_point(u_end.u, target, kernel, s_len, xspec, thresholds))
                v, s = u_end.u.values, target
                reason = "reached end"
                break
            vn = sn = None
            its = step_cfg.max_corrector
        else:
            vn, sn, its = arc.correct(vp, sp, t, step_cfg.max_corrector)
        if vn is not None:
            check = newton_solve(Field(g, vn), sn, kernel, cfg, xspec=xspec, thresholds=thresholds)
            if check.converged:
                vn = check.u.values
            else:
                vn = None
        if vn is None:
            ds *= step_cfg.shrink
            if ds < step_cfg.ds_min:
                reason = "step underflow"
                break
            continue
        s_len += math.sqrt(arc.dot((vn - v, sn - s), (vn - v, sn - s)))
        points.append(_point(Field(g, vn), sn, kernel, s_len, xspec, thresholds))
        t = arc.tangent(vn, sn, prev=t)
        v, s = vn, sn
        if its <= step_cfg.fast_iterations:
            ds = min(ds * step_cfg.grow, step_cfg.ds_max)
    return Branch(points, reason)


# -- uniqueness sweep ---------------------------------------------------------

DIAGRAM_HEADER = ["sigma", "classification", "x_norm", "sup_norm", "min_value", "max_dispersion"]


def band_limited_seed(grid, rng, K_cap=10.0, max_mode=None, width=None):
    """Random smooth nonnegative field with amplitude drawn from ``[0, K_cap]``.

    Fourier coefficients are Gaussian with envelope ``exp(-(|j| / width)^2)`` and
    vanish for mode indices above ``max_mode`` (default ``n / 8``).
    """
    n = grid.n
    max_mode = n // 8 if max_mode is None else max_mode
    width = max(2.0, n / 32) if width is None else width
    idx = [np.fft.fftfreq(n, 1.0 / n)] * (grid.d - 1) + [np.arange(n // 2 + 1, dtype=float)]
    J = np.meshgrid(*idx, indexing="ij")
    jmag = np.sqrt(sum(j**2 for j in J))
    inband = np.ones(jmag.shape, dtype=bool)
    for j in J:
        inband &= np.abs(j) <= max_mode
    coeffs = (rng.standard_normal(jmag.shape) + 1j * rng.standard_normal(jmag.shape)) * np.exp(-((jmag / width) ** 2))
    coeffs = np.where(inband, coeffs, 0.0)
    coeffs.flat[0] = 0.0
    v = grid.ifft(coeffs)
    span = v.max() - v.min()
    v = (v - v.min()) / span if span > 0 else np.zeros_like(v)
    return Field(grid, v * rng.uniform(0.0, K_cap))


def seed_streams(rng_seed, count):
    """Independent generators spawned from one 64-bit seed (numpy SeedSequence)."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(int(rng_seed)).spawn(count)]


@dataclass
class DiagramDataset:
    rows: list
    searches: list = field(default_factory=list)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(DIAGRAM_HEADER)
            for r in self.rows:
                w.writerow([repr(float(r[0])), r[1]] + [repr(float(x)) for x in r[2:]])

    def classifications(self, sigma=None):
        return sorted(r[1] for r in self.rows if sigma is None or r[0] == sigma)


def sweep_uniqueness(kernel, sigma_list, grid, n_seeds=50, rng_seed=0, K_cap=10.0, cfg=SolverConfig(),
                     threads=1, xspec=DEFAULT_X, thresholds=Thresholds()):
    """Deflated root search at each sigma from reproducible random seeds.

    Each sigma draws its seeds from its own spawned stream, so the dataset does
    not depend on ``threads``. Unconverged seeds appear as ``unconverged`` rows;
    roots above ``K_cap`` are dropped from the rows and kept in ``searches``.
    """
    sigma_list = [float(s) for s in sigma_list]
    if any(s < 0 for s in sigma_list):
        raise ParameterError("sigma values must be nonnegative")
    streams = seed_streams(rng_seed, len(sigma_list))

    def one(args):
        sigma, rng = args
        seeds = [band_limited_seed(grid, rng, K_cap) for _ in range(n_seeds)]
        return deflated_search(sigma, kernel, seeds, cfg, K_cap=K_cap, xspec=xspec, thresholds=thresholds)

    with ThreadPoolExecutor(max_workers=max(1, int(threads))) as pool:
        searches = list(pool.map(one, zip(sigma_list, streams)))
    rows = []
    for search in searches:
        md = max_growth(search.sigma, kernel) if (kernel is not None or search.sigma == 0) else float("nan")
        for sol in search.roots:
            rows.append((search.sigma, sol.classification, sol.x_norm, sol.sup_norm, sol.min_value, md))
        for sol in search.unconverged:
            rows.append((search.sigma, "unconverged", sol.x_norm, sol.sup_norm, sol.min_value, md))
    return DiagramDataset(rows, searches)
