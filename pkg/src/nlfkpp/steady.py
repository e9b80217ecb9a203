"""Steady states of F(u, sigma) = 0: preconditioned Newton-Krylov, deflation, classification."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .krylov import gmres
from .norms import DEFAULT_X, x_norm
from .operator import OperatorParams, StationaryMap
from .spectral import Field

CLASSES = ("zero", "one", "nonneg_nontrivial", "sign_changing")


@dataclass(frozen=True)
class SolverConfig:
    newton_tol: float = 1e-10
    max_newton: int = 50
    krylov_tol: float = 1e-8
    max_krylov: int = 200
    ls_factor: float = 0.5
    ls_max: int = 20

    def __post_init__(self):
        if min(self.newton_tol, self.krylov_tol) <= 0:
            raise ParameterError("tolerances must be positive")
        if min(self.max_newton, self.max_krylov, self.ls_max) < 1:
            raise ParameterError("iteration caps must be >= 1")
        if not 0 < self.ls_factor < 1:
            raise ParameterError("line-search factor must lie in (0, 1)")


@dataclass(frozen=True)
class Thresholds:
    zero: float = 1e-6
    one: float = 1e-6
    sign: float = 1e-8


@dataclass
class DeflationConfig:
    shift: float = 1.0
    power: float = 2.0
    known_roots: list = field(default_factory=list)

    def __post_init__(self):
        if self.shift <= 0 or self.power < 1:
            raise ParameterError("deflation needs shift > 0 and power >= 1")


@dataclass
class SteadySolution:
    u: Field
    sigma: float
    residual_norm: float
    x_norm: float
    sup_norm: float
    min_value: float
    classification: str
    converged: bool
    iterations: int = 0
    diagnostics: dict = field(default_factory=dict)

    def to_record(self, field_file=""):
        return {
            "sigma": self.sigma,
            "classification": self.classification,
            "residual": self.residual_norm,
            "x_norm": self.x_norm,
            "sup_norm": self.sup_norm,
            "min": self.min_value,
            "field_file": field_file,
        }


def classify(u, thresholds=Thresholds()):
    v = u.values
    if np.max(np.abs(v)) < thresholds.zero:
        return "zero"
    if np.max(np.abs(v - 1.0)) < thresholds.one:
        return "one"
    if v.min() < -thresholds.sign and v.max() > thresholds.sign:
        return "sign_changing"
    return "nonneg_nontrivial"


def make_solution(u, sigma, res_norm, converged, iterations=0, xspec=DEFAULT_X, thresholds=Thresholds(), **diag):
    return SteadySolution(
        u=u, sigma=float(sigma), residual_norm=float(res_norm), x_norm=float(x_norm(u, xspec)),
        sup_norm=u.sup_norm, min_value=u.min, classification=classify(u, thresholds),
        converged=bool(converged), iterations=iterations, diagnostics=diag,
    )


class _Deflation:
    """Shifted-power deflation ``prod_j (shift + ||u - u_j||^-power)`` in grid L2."""

    def __init__(self, roots, shift, power, cell_volume):
        self.roots = [np.asarray(r) for r in roots]
        self.shift = shift
        self.power = power
        self.dv = cell_volume

    def _dists(self, v):
        return [math.sqrt(self.dv * float(np.sum((v - r) ** 2))) for r in self.roots]

    def factor(self, v):
        out = 1.0
        for dist in self._dists(v):
            out *= self.shift + (dist ** -self.power if dist > 0 else math.inf)
        return out

    def step_scale(self, v, delta):
        """Scale turning the undeflated Newton step into the deflated one.

        From Sherman-Morrison on ``M J + F grad(M)^T``: ``tau = 1 / (1 - grad(log M) . delta)``.
        """
        s = 0.0
        for r, dist in zip(self.roots, self._dists(v)):
            if dist == 0:
                return 0.0
            m = self.shift + dist ** -self.power
            grad_dot = -self.power * dist ** (-self.power - 2) * self.dv * float(np.sum((v - r) * delta))
            s += grad_dot / m
        denom = 1.0 - s
        return 1.0 / denom if denom > 1e-12 else 1.0


def newton_solve(u0, sigma, kernel=None, cfg=SolverConfig(), deflation=None, xspec=DEFAULT_X,
                 thresholds=Thresholds()):
    """Newton iteration with GMRES solves preconditioned by ``(Lap - 1)^-1``.

    ``deflation`` is a :class:`DeflationConfig`; its roots (Fields or arrays) are
    deflated. The line search backtracks on the max-norm of the (deflated) residual.
    Convergence is always judged on the undeflated residual.
    """
    g = u0.grid
    params = OperatorParams(float(sigma), kernel)
    m = StationaryMap(g, params)
    defl = None
    if deflation is not None and deflation.known_roots:
        roots = [r.values if isinstance(r, Field) else (r.u.values if isinstance(r, SteadySolution) else r)
                 for r in deflation.known_roots]
        defl = _Deflation(roots, deflation.shift, deflation.power, g.cell_volume)

    v = np.array(u0.values, dtype=float)
    F = m.residual(v)
    fn = float(np.max(np.abs(F)))
    diag = {"krylov_iterations": [], "krylov_stagnated": False, "reason": ""}
    it = 0
    converged = fn <= cfg.newton_tol
    while not converged and it < cfg.max_newton:
        cv = m.conv(v)
        sol = gmres(lambda V: m.jacobian(v, V, cv), -F, tol=cfg.krylov_tol, maxiter=cfg.max_krylov,
                    precondition=m.precondition)
        diag["krylov_iterations"].append(sol.iterations)
        if sol.stagnated:
            diag["krylov_stagnated"] = True
        delta = sol.x
        merit = fn
        if defl is not None:
            delta = delta * defl.step_scale(v, delta)
            merit = fn * defl.factor(v)
        lam = 1.0
        accepted = False
        for _ in range(cfg.ls_max + 1):
            vt = v + lam * delta
            Ft = m.residual(vt)
            fnt = float(np.max(np.abs(Ft)))
            merit_t = fnt * defl.factor(vt) if defl is not None else fnt
            if np.isfinite(merit_t) and merit_t < merit:
                accepted = True
                break
            lam *= cfg.ls_factor
        it += 1
        if not accepted:
            diag["reason"] = "line search failed"
            break
        v, F, fn = vt, Ft, fnt
        converged = fn <= cfg.newton_tol
        if not np.all(np.isfinite(v)):
            diag["reason"] = "non-finite iterate"
            break
    if not converged and not diag["reason"]:
        diag["reason"] = "iteration cap"
    if not np.all(np.isfinite(v)):
        v = np.array(u0.values, dtype=float)
    u = Field(g, v, warnings=m.flags)
    return make_solution(u, sigma, fn, converged, it, xspec, thresholds, **diag)


@dataclass
class SearchResult:
    sigma: float
    roots: list
    unconverged: list = field(default_factory=list)
    rejected: list = field(default_factory=list)
    rediscovered: int = 0

    def __iter__(self):
        return iter(self.roots)

    def __len__(self):
        return len(self.roots)

    def __getitem__(self, i):
        return self.roots[i]


def deflated_search(sigma, kernel, seeds, cfg=SolverConfig(), dcfg=None, K_cap=None, distinct_tol=1e-6,
                    xspec=DEFAULT_X, thresholds=Thresholds()):
    """Enumerate distinct roots from ``seeds``, deflating every root found so far.

    ``u = 0`` and ``u = 1`` are always pre-seeded as known roots and reported.
    Converged roots with sup-norm above ``K_cap`` are deflated but listed under
    ``rejected``. A seed whose deflated solve fails is retried without deflation;
    if that lands on a known root it counts as ``rediscovered``, so only seeds that
    fail both ways are reported as unconverged.
    """
    seeds = list(seeds)
    if not seeds:
        raise ParameterError("deflated_search needs at least one seed")
    dcfg = dcfg or DeflationConfig()
    g = seeds[0].grid
    known = [g.zeros(), g.constant(1.0)] + [r.u if isinstance(r, SteadySolution) else r for r in dcfg.known_roots]
    params = OperatorParams(float(sigma), kernel)
    m = StationaryMap(g, params)
    roots = []
    for u in known:
        res = float(np.max(np.abs(m.residual(u.values))))
        roots.append(make_solution(u, sigma, res, res <= cfg.newton_tol, 0, xspec, thresholds))
    out = SearchResult(float(sigma), roots)
    deflate = [u.values for u in known]

    def is_known(v):
        return any(math.sqrt(g.cell_volume * float(np.sum((v - r) ** 2))) <= distinct_tol for r in deflate)

    for idx, seed in enumerate(seeds):
        sol = newton_solve(seed, sigma, kernel, cfg,
                           DeflationConfig(dcfg.shift, dcfg.power, deflate), xspec, thresholds)
        if not sol.converged:
            plain = newton_solve(seed, sigma, kernel, cfg, None, xspec, thresholds)
            if not plain.converged:
                sol.diagnostics["seed_index"] = idx
                out.unconverged.append(sol)
                continue
            sol = plain
        sol.diagnostics["seed_index"] = idx
        v = sol.u.values
        if is_known(v):
            out.rediscovered += 1
            continue
        deflate.append(v)
        if K_cap is not None and sol.sup_norm > K_cap:
            out.rejected.append(sol)
        else:
            out.roots.append(sol)
    return out
