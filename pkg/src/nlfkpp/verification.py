"""Direct numerical checks of oscillatory nullspaces, radial comparison profiles,
weighted integrability, and closed-form Gaussian integrals.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize, special

from . import continuation
from .errors import ParameterError
from .krylov import gmres
from .norms import loglog_slope, mollifier_convergence, young_check, young_constant
from .operator import (LinearOperatorTag, OperatorParams, jacobian_apply, linear_apply, residual, symbol,
                       taylor_remainder)
from .spectral import Field, Grid, laplacian


@dataclass
class CheckReport:
    check_name: str
    passed: bool
    metrics: dict = field(default_factory=dict)

    def to_json(self):
        return json.dumps({"check_name": self.check_name, "passed": bool(self.passed), "metrics": self.metrics},
                          default=float)


# -- oscillatory nullspace of Lap + (1 + alpha) ---------------------------------

@dataclass
class OscillatorySolution:
    u: Field
    requested: float
    wavenumber: float
    residual: float

    @property
    def adjustment(self):
        return self.wavenumber - self.requested


def oscillatory_solution(alpha, grid):
    """``cos(k x_1)`` with ``k`` the grid wavenumber nearest ``sqrt(1 + alpha)``.

    ``residual`` is the max-norm of ``Lap U + k^2 U``, i.e. of ``L0_alpha`` evaluated
    at the snapped ``alpha' = k^2 - 1``.
    """
    if not -1 < alpha < 1:
        raise ParameterError(f"alpha must lie in (-1, 1), got {alpha}")
    want = math.sqrt(1 + alpha)
    k, j = grid.snap_wavenumber(want)
    if j == 0 or abs(k * k - 1) >= 1:
        raise ParameterError(f"grid has no admissible wavenumber near {want}")
    if grid.d == 1:
        u = grid.from_function(lambda x: np.cos(k * x))
    else:
        u = grid.from_function(lambda x1, x2: np.cos(k * x1) + 0 * x2)
    res = linear_apply(LinearOperatorTag.L0_alpha(k * k - 1), u).sup_norm
    return OscillatorySolution(u, want, k, res)


# -- radial comparison profiles ---------------------------------------------

@dataclass
class ComparisonSolution:
    """Radial solution of ``Lap v + (1 - eps) v = 0`` regular at the origin, ``v(0) = 1``."""

    d: int
    eps: float
    kappa: float
    radii: tuple
    zeros: tuple
    profile: object = field(repr=False)
    u: Field | None = field(default=None, repr=False)
    residual: float = math.nan

    def __call__(self, r):
        return self.kappa * self.profile(np.asarray(r, dtype=float))

    def scaled(self, kappa):
        return ComparisonSolution(self.d, self.eps, kappa, self.radii, self.zeros, self.profile, self.u, self.residual)


def _radial_profile(d, k, r_max):
    """Callable ``v(r)`` for ``v'' + (d-1)/r v' + k^2 v = 0`` with ``v(0) = 1``."""
    if d == 1:
        return lambda r: np.cos(k * np.abs(r))
    r0 = 1e-3
    # regular series start for d = 2
    y0 = [1 - (k * r0) ** 2 / 4 + (k * r0) ** 4 / 64, -(k**2) * r0 / 2 + k**4 * r0**3 / 16]
    sol = integrate.solve_ivp(lambda r, y: [y[1], -y[1] / r - k * k * y[0]], (r0, r_max), y0,
                              method="DOP853", rtol=1e-13, atol=1e-15, dense_output=True)

    def v(r):
        r = np.abs(np.asarray(r, dtype=float))
        out = np.empty_like(r)
        near = r < r0
        rn = r[near]
        out[near] = 1 - (k * rn) ** 2 / 4 + (k * rn) ** 4 / 64
        if not near.all():
            out[~near] = sol.sol(r[~near])[0]
        return out

    return v


def _first_zeros(v, k, count=3):
    zeros = []
    r = 1e-6
    step = 0.05 / k
    prev = float(v(np.array([r]))[0])
    while len(zeros) < count:
        r_next = r + step
        cur = float(v(np.array([r_next]))[0])
        if prev * cur < 0:
            zeros.append(optimize.brentq(lambda s: float(v(np.array([s]))[0]), r, r_next, xtol=1e-14))
        r, prev = r_next, cur
    return zeros


def radial_window(grid, width=0.5, clearance=6.0):
    """Smooth cutoff equal to 1 (to round-off) for ``r <= inner`` and ~0 at the box edge.

    Returns the window and ``inner``, the radius inside which residuals are meaningful.
    """
    centre = grid.L - clearance * width
    w = 0.5 * special.erfc((grid.radius - centre) / width)
    return w, centre - clearance * width


def radial_comparison(eps, d, grid, window_width=0.5):
    """Radial Helmholtz profile with its sign-change radii and grid residual.

    ``radii = (delta1, delta2, delta3)``: the first two zeros and the crest between
    the second and third zeros. The residual of ``Lap v + (1 - eps) v`` is taken
    spectrally on the windowed profile, inside the radius where the window is one.
    """
    if not 0 <= eps < 1:
        raise ParameterError(f"eps must lie in [0, 1), got {eps}")
    if d not in (1, 2) or grid.d != d:
        raise ParameterError("dimension must be 1 or 2 and match the grid")
    k = math.sqrt(1 - eps)
    v = _radial_profile(d, k, math.sqrt(d) * grid.L + 1)
    zeros = _first_zeros(v, k, 3)
    crest = optimize.minimize_scalar(lambda s: -float(v(np.array([s]))[0]), bounds=(zeros[1], zeros[2]),
                                     method="bounded", options={"xatol": 1e-12}).x
    radii = (zeros[0], zeros[1], float(crest))
    vals = v(grid.radius)
    win, inner = radial_window(grid, window_width)
    wf = Field(grid, vals * win)
    res_field = laplacian(wf).values + k * k * wf.values
    mask = grid.radius <= inner
    residual = float(np.max(np.abs(res_field[mask]))) if mask.any() else math.nan
    return ComparisonSolution(d, eps, 1.0, radii, tuple(zeros), v, Field(grid, vals), residual)


@dataclass
class ComparisonReport:
    applicable: bool
    inequality_max: float = math.nan
    inequality_holds: bool = False
    kappa: float = math.nan
    xcond_holds: bool = False
    exceeds_inner: bool = False
    contradiction_pattern: bool = False
    inequality: Field | None = field(default=None, repr=False)
    note: str = ""


def comparison_check(u, eps, sol, tol=1e-8, delta_frac=0.1):
    """Evaluate ``Lap u + (1 - eps) u <= tol`` and the scaled-profile exceedance pattern.

    The comparison profile is centred at the grid maximum of ``u``. ``kappa`` is
    chosen so the scaled profile exceeds ``u`` on the annulus
    ``delta2 + delta < r < delta3`` (``delta = delta_frac (delta3 - delta2)``); the
    pattern is present when additionally the inequality holds and the scaled profile
    exceeds ``u`` somewhere inside ``r < delta1``.
    """
    if not u.sup_norm < eps:
        return ComparisonReport(False, note=f"sup norm {u.sup_norm:.3e} is not below eps={eps}")
    g = u.grid
    centre = np.unravel_index(int(np.argmax(u.values)), g.shape)
    shift = tuple(g.n // 2 - c for c in centre)
    vals = np.roll(u.values, shift, axis=tuple(range(g.d)))
    uc = Field(g, vals)
    ineq = laplacian(uc).values + (1 - eps) * vals
    imax = float(np.max(ineq))
    d1, d2, d3 = sol.radii
    delta = delta_frac * (d3 - d2)
    r = g.radius
    bar = sol.profile(r)
    annulus = (r > d2 + delta) & (r < d3)
    inner = r < d1
    if not annulus.any() or not inner.any():
        return ComparisonReport(False, imax, imax <= tol, inequality=Field(g, ineq),
                                note="grid does not resolve the comparison radii")
    ratio = float(np.max(vals[annulus] / bar[annulus]))
    kappa = 2.0 * ratio if ratio > 0 else 1.0
    xcond = bool(np.all(kappa * bar[annulus] > vals[annulus]))
    exceeds = bool(np.any(kappa * bar[inner] > vals[inner]))
    holds = imax <= tol
    return ComparisonReport(True, imax, holds, kappa, xcond, exceeds, holds and xcond and exceeds, Field(g, ineq))


# -- weighted integrability of the L1 nullspace in 1D ------------------------------

@dataclass
class IntegrabilityResult:
    decision: str
    quadrature_verdict: str
    log_integrals: list
    value: float = math.nan

    @property
    def consistent(self):
        return self.decision == self.quadrature_verdict


def _log_truncated_integral(c1, c2, l, R, n=20001):
    x = np.linspace(-R, R, n)
    # log |c1 e^-x + c2 e^x|^2 computed without overflow
    with np.errstate(divide="ignore"):
        a = np.log(abs(c1)) - x if c1 != 0 else np.full_like(x, -np.inf)
        b = np.log(abs(c2)) + x if c2 != 0 else np.full_like(x, -np.inf)
    hi = np.maximum(a, b)
    finite = np.isfinite(hi)
    logabs = np.full_like(x, -np.inf)
    s1 = math.copysign(1.0, c1) if c1 else 0.0
    s2 = math.copysign(1.0, c2) if c2 else 0.0
    with np.errstate(invalid="ignore", divide="ignore"):
        inner = s1 * np.exp(a - hi) + s2 * np.exp(b - hi)
        logabs[finite] = hi[finite] + np.log(np.abs(inner[finite]))
    logf = 2 * logabs - l * np.log1p(x * x)
    if not np.isfinite(logf).any():
        return -math.inf
    m = np.max(logf[np.isfinite(logf)])
    return float(m + np.log(integrate.trapezoid(np.exp(logf - m), x)))


def weighted_integrability_1d(c1, c2, l=1.0, weight="polynomial", radii=(20.0, 40.0, 80.0, 160.0)):
    """Is ``int (c1 e^-x + c2 e^x)^2 w(x) dx`` finite?

    For the polynomial weight ``(1 + x^2)^-l`` each exponential grows in one
    direction, so the integral is finite exactly when both coefficients vanish.
    The decision is cross-checked by the growth of truncated integrals on
    expanding intervals. ``weight="gaussian"`` uses ``e^{-x^2}`` instead, for
    which the integral is always finite and given in closed form.
    """
    if weight == "gaussian":
        val = (c1 * c1 * gaussian_exponential_integral(-2.0, 1.0) + 2 * c1 * c2 * gaussian_exponential_integral(0.0, 1.0)
               + c2 * c2 * gaussian_exponential_integral(2.0, 1.0))
        return IntegrabilityResult("finite", "finite", [], float(val))
    if weight != "polynomial":
        raise ParameterError(f"unknown weight {weight!r}")
    if not l > 0.5:
        raise ParameterError("weight exponent must exceed 1/2")
    decision = "finite" if (c1 == 0 and c2 == 0) else "infinite"
    logs = [_log_truncated_integral(c1, c2, l, R) for R in radii]
    if all(v == -math.inf for v in logs):
        verdict = "finite"
    else:
        growth = logs[-1] - logs[-2]
        verdict = "infinite" if growth > math.log(2.0) else "finite"
    value = 0.0 if decision == "finite" else math.inf
    return IntegrabilityResult(decision, verdict, list(zip(radii, logs)), value)


def gaussian_exponential_integral(a1, a2):
    """``int exp(a1 x - a2 x^2) dx = exp(a1^2 / (4 a2)) sqrt(pi / a2)``."""
    if not a2 > 0:
        raise ParameterError(f"integral diverges for a2={a2} <= 0")
    return math.exp(a1 * a1 / (4 * a2)) * math.sqrt(math.pi / a2)


def gaussian_exponential_quadrature(a1, a2):
    centre = a1 / (2 * a2)
    f = lambda x: math.exp(a1 * x - a2 * x * x)
    return integrate.quad(f, -np.inf, centre, epsabs=0, epsrel=1e-13, limit=200)[0] + \
        integrate.quad(f, centre, np.inf, epsabs=0, epsrel=1e-13, limit=200)[0]


def exponential_weight_nullspace(c1=1.0, c2=1.0):
    """Weighted L2 mass of ``c1 e^-x + c2 e^x`` under ``e^{-x^2}``: finite, so ``Lap - 1``
    has a nonzero kernel in that space."""
    return weighted_integrability_1d(c1, c2, weight="gaussian").value


# -- randomized inputs shared by the check suite and the tests ----------------------

def young_triples(rng, count, grid, K_cap=10.0):
    """``count`` random (kernel, sigma, field) triples: family uniform over the
    closed-form families, sigma uniform in [0.05, 2], field a band-limited seed."""
    from .kernel import Kernel

    families = (Kernel.gaussian, Kernel.laplace, Kernel.tophat)
    for _ in range(count):
        kernel = families[rng.integers(len(families))](grid.d)
        sigma = float(rng.uniform(0.05, 2.0))
        u = continuation.band_limited_seed(grid, rng, K_cap)
        if u.sup_norm == 0:
            u = grid.constant(1.0)
        yield kernel, sigma, u


def integrability_cases(rng, count):
    """Coefficient pairs, each entry zero with probability 1/2, otherwise a random
    sign times a magnitude log-uniform in [1e-8, 10]."""
    def coef():
        if rng.random() < 0.5:
            return 0.0
        return float(rng.choice([-1.0, 1.0]) * 10 ** rng.uniform(-8, 1))

    return [(coef(), coef()) for _ in range(count)]


# -- check suite ----------------------------------------------------------------------

YOUNG_COUNTEREXAMPLE = {"L": 20.0, "n": 512, "sigma": 3.0, "l": 1.0, "field": "1 - 0.1 cos(pi x / L)"}


def young_counterexample_ratio():
    """Gaussian kernel on a nearly flat field with a dip where the weight peaks."""
    from .kernel import Kernel, scale

    c = YOUNG_COUNTEREXAMPLE
    g = Grid(1, c["L"], c["n"])
    u = g.from_function(lambda x: 1 - 0.1 * np.cos(np.pi * x / c["L"]))
    return young_check(scale(Kernel.gaussian(), c["sigma"]), u, 2.0, c["l"])


def _status(ok):
    return "pass" if ok else "fail"


def _check_trivial_roots(grid, **_):
    from .kernel import Kernel

    worst = 0.0
    for kernel in (Kernel.gaussian(), Kernel.tophat()):
        for sigma in (0.0, 0.1, 1.0):
            params = OperatorParams(sigma, kernel if sigma > 0 else None)
            for c in (0.0, 1.0):
                worst = max(worst, residual(grid.constant(c), params).sup_norm)
    return worst <= 1e-12, {"max_residual": worst}


def _check_linearization(grid, rng, **_):
    from .kernel import Kernel

    worst_id, worst_fd = 0.0, 0.0
    p0 = OperatorParams(0.0)
    pk = OperatorParams(0.5, Kernel.gaussian())
    for _ in range(20):
        U = continuation.band_limited_seed(grid, rng, 1.0)
        lap = laplacian(U)
        for c, sign in ((0.0, 1.0), (1.0, -1.0)):
            J = jacobian_apply(grid.constant(c), p0, U)
            worst_id = max(worst_id, (J - (lap + U * sign)).sup_norm)
        u = continuation.band_limited_seed(grid, rng, 2.0)
        h = 1e-3  # F is quadratic: central differences are exact up to round-off
        fd = (residual(u + U * h, pk) - residual(u - U * h, pk)) / (2 * h)
        J = jacobian_apply(u, pk, U)
        worst_fd = max(worst_fd, (fd - J).sup_norm / max(J.sup_norm, 1e-300))
    return worst_id <= 1e-10 and worst_fd <= 1e-6, {"identity_error": worst_id, "central_difference_rel": worst_fd}


def _check_l1_invertibility(grid, rng, weight="polynomial", **_):
    f = continuation.band_limited_seed(grid, rng, 1.0)
    tag = LinearOperatorTag.L1()
    sol = gmres(lambda V: linear_apply(tag, Field(grid, V)).values, f.values, tol=1e-10,
                precondition=lambda r: grid.ifft(grid.fft(r) / (-1.0 - grid.ksq)))
    min_symbol = float(np.min(np.abs(symbol(tag, np.sqrt(grid.ksq)))))
    rel = sol.residual / float(np.linalg.norm(f.values))
    metrics = {"iterations": sol.iterations, "relative_residual": rel, "min_abs_symbol": min_symbol}
    ok = sol.iterations == 1 and rel <= 1e-10 and abs(min_symbol - 1.0) <= 1e-14
    if weight == "exponential":
        # cosh lies in the weighted space and solves Lap U - U = 0 exactly
        metrics["nullspace_weighted_norm_sq"] = exponential_weight_nullspace(0.5, 0.5)
        return False, metrics
    return ok, metrics


def _check_oscillatory(grid, **_):
    g = Grid(1, 20 * math.pi, 1024)
    metrics, ok = {}, True
    for alpha in (-0.5, 0.0, 0.5):
        sol = oscillatory_solution(alpha, g)
        changes = sol.u.min < 0 < sol.u.max
        ok &= sol.residual <= 1e-10 and changes
        metrics[f"alpha={alpha:g}"] = {"wavenumber": sol.wavenumber, "residual": sol.residual, "sign_change": changes}
    return ok, metrics


def _check_young_schur(grid, rng, n_young=20, **_):
    from .kernel import scale

    grid = Grid(1, 40.0, 512)  # room for the widest laplace tails
    worst, unit_violations, max_ratio = 0.0, 0, 0.0
    for kernel, sigma, u in young_triples(rng, n_young, grid):
        sk = scale(kernel, sigma)
        r = young_check(sk, u, 2.0, 1.0)
        max_ratio = max(max_ratio, r)
        unit_violations += r > 1 + 1e-8
        worst = max(worst, r / young_constant(sk, grid, 2.0, 1.0))
    return worst <= 1 + 1e-6, {"max_ratio_over_constant": worst, "max_ratio": max_ratio,
                                "unit_constant_violations": int(unit_violations), "triples": n_young}


def _check_young_unit(grid, **_):
    ratio = young_counterexample_ratio()
    return ratio <= 1 + 1e-8, {"counterexample": YOUNG_COUNTEREXAMPLE, "ratio": ratio}


def _check_mollifier(grid, **_):
    from .kernel import Kernel

    g = Grid(1, 20.0, 1024)
    u = g.from_function(lambda x: np.exp(-(x**2)))
    sigmas = [0.4, 0.2, 0.1, 0.05]
    errs = mollifier_convergence(Kernel.gaussian(), u, 2.0, 1.0, sigmas)
    slope = loglog_slope(sigmas, errs)
    return abs(slope - 2.0) <= 0.2, {"slope": slope, "errors": errs.tolist()}


def _check_integrability(grid, rng, weight="polynomial", **_):
    cases = integrability_cases(rng, 200)
    if weight == "exponential":
        wrong = sum(weighted_integrability_1d(c1, c2, weight="gaussian").decision != "infinite"
                    for c1, c2 in cases if (c1, c2) != (0.0, 0.0))
        return False, {"cases": len(cases), "nonzero_pairs_with_finite_norm": int(wrong)}
    mismatches = inconsistent = 0
    for c1, c2 in cases:
        res = weighted_integrability_1d(c1, c2, 1.0)
        mismatches += res.decision != ("finite" if c1 == 0 and c2 == 0 else "infinite")
        inconsistent += not res.consistent
    return mismatches == 0 and inconsistent == 0, {"cases": len(cases), "mismatches": int(mismatches),
                                                   "quadrature_disagreements": int(inconsistent)}


def _check_gaussian_integral(grid, **_):
    worst = 0.0
    for a1 in np.linspace(-5, 5, 11):
        for a2 in (0.1, 0.5, 1.0, 3.0, 10.0):
            exact = gaussian_exponential_integral(a1, a2)
            worst = max(worst, abs(exact - gaussian_exponential_quadrature(a1, a2)) / exact)
    sqrt_pi = gaussian_exponential_integral(0.0, 1.0)
    ok = worst <= 1e-10 and abs(sqrt_pi - math.sqrt(math.pi)) <= 1e-15
    return ok, {"max_relative_error": worst, "value_at_0_1": sqrt_pi}


def _check_radial(grid, **_):
    metrics, ok = {}, True
    for d, eps, n in ((1, 0.0, 512), (2, 0.0, 256), (2, 0.19, 256)):
        sol = radial_comparison(eps, d, Grid(d, 20.0, n))
        d1, d2, d3 = sol.radii
        r = np.linspace(0, d3, 4001)
        v = sol.profile(r)
        signs = (np.all(v[r < d1 - 1e-9] > 0) and np.all(v[(r > d1 + 1e-9) & (r < d2 - 1e-9)] < 0)
                 and np.all(v[r > d2 + 1e-9] > 0))
        ok &= sol.residual <= 1e-8 and bool(signs)
        metrics[f"d={d},eps={eps:g}"] = {"first_zero": d1, "radii": list(sol.radii), "residual": sol.residual,
                                         "sign_pattern": bool(signs)}
    ok &= abs(metrics["d=1,eps=0"]["first_zero"] - math.pi / 2) <= 1e-10
    ok &= abs(metrics["d=2,eps=0"]["first_zero"] - 2.404826) <= 1e-6
    ok &= abs(metrics["d=2,eps=0.19"]["first_zero"] - 2.404826 / 0.9) <= 1e-5
    return ok, metrics


def _check_comparison(grid, **_):
    g = Grid(1, 20.0, 512)
    sol = radial_comparison(0.5, 1, g)
    zero = comparison_check(g.zeros(), 0.5, sol)
    bump = comparison_check(g.from_function(lambda x: 1e-3 * (1 + np.cos(x))), 0.5, sol)
    ok = zero.applicable and zero.inequality_max == 0.0 and zero.contradiction_pattern and bump.applicable
    return ok, {"zero_inequality_max": zero.inequality_max, "zero_pattern": zero.contradiction_pattern,
                "bump_inequality_max": bump.inequality_max, "bump_pattern": bump.contradiction_pattern}


def _check_taylor(grid, rng, **_):
    from .kernel import Kernel

    params = OperatorParams(0.5, Kernel.gaussian())
    one = grid.constant(1.0)
    worst = 0.0
    for _ in range(5):
        U = continuation.band_limited_seed(grid, rng, 1.0)
        lhs = residual(one + U, params) - residual(one, params) - jacobian_apply(one, params, U)
        worst = max(worst, (lhs - taylor_remainder(U, params)).sup_norm)
    return worst <= 1e-10, {"max_error": worst}


CHECKS = {
    "trivial_roots": _check_trivial_roots,
    "linearization_identities": _check_linearization,
    "l1_invertibility": _check_l1_invertibility,
    "l0_oscillatory_nullspace": _check_oscillatory,
    "weighted_young_schur_constant": _check_young_schur,
    "weighted_young_unit_constant": _check_young_unit,
    "mollifier_convergence": _check_mollifier,
    "weighted_integrability": _check_integrability,
    "gaussian_exponential_integral": _check_gaussian_integral,
    "radial_comparison_profiles": _check_radial,
    "comparison_pattern": _check_comparison,
    "taylor_remainder": _check_taylor,
}

# Checks whose failure is the documented mathematical outcome under a setting.
EXPECTED_FAILURES = {
    "polynomial": {"weighted_young_unit_constant"},
    "exponential": {"weighted_young_unit_constant", "l1_invertibility", "weighted_integrability"},
}


def run_checks(weight="polynomial", seed=0, n=1024, L=20.0, n_young=20, only=None):
    """Run the check suite; returns a list of :class:`CheckReport`.

    A failing check listed in :data:`EXPECTED_FAILURES` for ``weight`` gets status
    ``expected-fail-documented`` and does not count as a failure.
    """
    if weight not in EXPECTED_FAILURES:
        raise ParameterError(f"weight must be one of {sorted(EXPECTED_FAILURES)}")
    unknown = set(only or ()) - set(CHECKS)
    if unknown:
        raise ParameterError(f"unknown checks: {sorted(unknown)}")
    grid = Grid(1, L, n)
    streams = continuation.seed_streams(seed, len(CHECKS))
    reports = []
    for (name, fn), rng in zip(CHECKS.items(), streams):
        if only is not None and name not in only:
            continue
        ok, metrics = fn(grid=grid, rng=rng, weight=weight, n_young=n_young)
        status = _status(ok)
        if not ok and name in EXPECTED_FAILURES[weight]:
            status = "expected-fail-documented"
        metrics["status"] = status
        reports.append(CheckReport(name, bool(ok), metrics))
    return reports


def suite_failed(reports):
    return [r.check_name for r in reports if r.metrics.get("status") == "fail"]
