"""Time integration of ``u_t = Lap u + u (1 - phi_sigma * u)`` and front experiments.

Diffusion is handled exactly in Fourier space (implicitly for ``imex_euler``,
through exponential factors for ``etd_rk2``); the nonlocal reaction is explicit
and dealiased.

After every step, values with ``|u| < noise_floor`` are set to zero. Without this,
FFT round-off in a region where ``u = 0`` grows at rate one and ignites the whole
box long before a front arrives. The floor acts as a tiny cutoff on the
leading edge of pulled fronts and lowers their speed by roughly ``pi^2 / ln(floor)^2``.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import BlowUpError, ParameterError
from .operator import OperatorParams, StationaryMap
from .spectral import Field, Grid

INTEGRATORS = ("imex_euler", "etd_rk2")


@dataclass(frozen=True)
class EvolutionConfig:
    dt: float = 0.01
    t_end: float = 200.0
    record_every: int = 100
    integrator: str = "imex_euler"
    front_level: float = 0.5
    noise_floor: float = 1e-12

    def __post_init__(self):
        if not self.dt > 0:
            raise ParameterError(f"dt must be positive, got {self.dt}")
        if self.t_end < 0:
            raise ParameterError("t_end must be nonnegative")
        if self.record_every < 1:
            raise ParameterError("record_every must be >= 1")
        if self.integrator not in INTEGRATORS:
            raise ParameterError(f"unknown integrator {self.integrator!r}")
        if self.noise_floor < 0:
            raise ParameterError("noise_floor must be nonnegative")

    @property
    def n_steps(self):
        return int(round(self.t_end / self.dt))


def _phi2(z):
    """``(e^z - 1 - z) / z^2`` without cancellation near zero."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = np.abs(z) < 1.0
    zs = z[small]
    acc = np.zeros_like(zs)
    term = np.full_like(zs, 0.5)
    for k in range(2, 24):
        acc += term
        term = term * zs / (k + 1)
    out[small] = acc
    zb = z[~small]
    out[~small] = (np.expm1(zb) - zb) / zb**2
    return out


def reaction_rate_bound(sup_u):
    """Bound on the explicit reaction Jacobian ``|1 - phi*u - u phi*.|``."""
    return 1.0 + 2.0 * max(1.0, sup_u)


def check_stability(cfg, u0):
    bound = cfg.dt * reaction_rate_bound(float(np.max(np.abs(u0))))
    if bound > 1.0:
        raise ParameterError(f"dt={cfg.dt} too large for the explicit reaction (dt * rate = {bound:.2f} > 1)")


class Stepper:
    """Reusable integrator for a fixed grid, sigma, kernel and step size."""

    def __init__(self, grid, sigma, kernel, cfg):
        self.grid = grid
        self.cfg = cfg
        self.map = StationaryMap(grid, OperatorParams(float(sigma), kernel))
        dt = cfg.dt
        z = -dt * grid.ksq
        if cfg.integrator == "imex_euler":
            self._den = 1.0 / (1.0 - z)
        else:
            self._E = np.exp(z)
            with np.errstate(divide="ignore", invalid="ignore"):
                phi1 = np.where(z == 0, 1.0, np.expm1(z) / np.where(z == 0, 1.0, z))
            self._p1 = dt * phi1
            self._p2 = dt * _phi2(z)

    def __call__(self, v):
        with np.errstate(over="ignore", invalid="ignore"):
            return self._advance(v)

    def _advance(self, v):
        g = self.grid
        N = self.map.reaction(v)
        if self.cfg.integrator == "imex_euler":
            out = g.ifft(self._den * g.fft(v + self.cfg.dt * N))
        else:
            vh = g.fft(v)
            Nh = g.fft(N)
            ah = self._E * vh + self._p1 * Nh
            a = g.ifft(ah)
            Na = self.map.reaction(a)
            out = g.ifft(ah + self._p2 * (g.fft(Na) - Nh))
        floor = self.cfg.noise_floor
        if floor > 0:
            out[np.abs(out) < floor] = 0.0
        return out


def step(u, sigma, kernel=None, cfg=EvolutionConfig()):
    check_stability(cfg, u.values)
    out = Stepper(u.grid, sigma, kernel, cfg)(u.values)
    if not np.all(np.isfinite(out)):
        raise BlowUpError(1)
    return Field(u.grid, out)


@dataclass
class EvolutionResult:
    times: np.ndarray
    sup_norm: np.ndarray
    min: np.ndarray
    max: np.ndarray
    mass: np.ndarray
    final: Field
    attractor: str
    min_over_time: float
    last_change: float

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "sup_norm", "min", "max", "mass"])
            for row in zip(self.times, self.sup_norm, self.min, self.max, self.mass):
                w.writerow([repr(float(x)) for x in row])


STEADY_TOL = 1e-9
OSCILLATION_TOL = 1e-6


def classify_attractor(signal, last_change, steady_tol=STEADY_TOL, osc_tol=OSCILLATION_TOL):
    """``steady`` / ``periodic`` / ``irregular`` from the recorded sup-norm signal.

    Steady means the final field stopped changing, or is still settling: the last
    change is below ``osc_tol`` and the last half of the signal is monotone or
    flat to ``osc_tol``. Periodic means that half oscillates with amplitude above
    ``osc_tol`` and at least three peaks whose heights and spacings agree to 5%.
    """
    s = np.asarray(signal[len(signal) // 2:], dtype=float)
    steps = np.diff(s)
    monotone = bool(np.all(steps >= 0) or np.all(steps <= 0))
    if last_change < steady_tol or (last_change <= osc_tol and (monotone or np.ptp(s) <= osc_tol)):
        return "steady"
    if s.size >= 7 and np.ptp(s) > osc_tol:
        peaks = np.where((s[1:-1] > s[:-2]) & (s[1:-1] >= s[2:]))[0] + 1
        if peaks.size >= 3:
            heights = s[peaks]
            gaps = np.diff(peaks)
            if np.ptp(heights) <= 0.05 * np.ptp(s) and np.ptp(gaps) <= max(1, 0.05 * gaps.mean()):
                return "periodic"
    return "irregular"


def run(u0, sigma, kernel=None, cfg=EvolutionConfig()):
    """Integrate to ``cfg.t_end`` recording norms every ``record_every`` steps."""
    g = u0.grid
    check_stability(cfg, u0.values)
    stepper = Stepper(g, sigma, kernel, cfg)
    v = u0.values.copy()
    rec = {"t": [], "sup": [], "min": [], "max": [], "mass": []}

    def record(k, arr):
        rec["t"].append(k * cfg.dt)
        rec["sup"].append(float(np.max(np.abs(arr))))
        rec["min"].append(float(arr.min()))
        rec["max"].append(float(arr.max()))
        rec["mass"].append(float(g.cell_volume * arr.sum()))

    record(0, v)
    prev_record = v.copy()
    last_change = math.inf
    running_min = float(v.min())
    for k in range(1, cfg.n_steps + 1):
        v = stepper(v)
        vmin = float(v.min())
        if not math.isfinite(vmin) or not np.all(np.isfinite(v)):
            raise BlowUpError(k)
        running_min = min(running_min, vmin)
        if k % cfg.record_every == 0 or k == cfg.n_steps:
            record(k, v)
            last_change = float(np.max(np.abs(v - prev_record)))
            prev_record = v.copy()
    attractor = classify_attractor(rec["sup"], last_change)
    return EvolutionResult(
        times=np.array(rec["t"]), sup_norm=np.array(rec["sup"]), min=np.array(rec["min"]),
        max=np.array(rec["max"]), mass=np.array(rec["mass"]), final=Field(g, v), attractor=attractor,
        min_over_time=running_min, last_change=last_change,
    )


def dominant_period(u):
    """Spatial period ``2 pi / xi`` of the strongest nonzero mode along axis 0."""
    g = u.grid
    vals = u.values if g.d == 1 else u.values.mean(axis=1)
    spec = np.abs(np.fft.rfft(vals - vals.mean()))
    spec[0] = 0.0
    j = int(np.argmax(spec))
    if j == 0:
        return math.inf
    return 2 * g.L / j


# -- fronts -------------------------------------------------------------------

@dataclass
class FrontReport:
    times: np.ndarray
    front_positions: np.ndarray
    fitted_speed: float
    tail_state: str
    tail_amplitude: float
    fit_window: tuple
    truncated: bool = False
    final: Field | None = field(default=None, repr=False)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "front_position", "fitted_speed", "tail_state"])
            for t, x in zip(self.times, self.front_positions):
                w.writerow([repr(float(t)), repr(float(x)), repr(float(self.fitted_speed)), self.tail_state])


def front_position(x, v, level):
    """Rightmost downward crossing of ``level`` (linear interpolation), or NaN."""
    idx = np.where((v[:-1] >= level) & (v[1:] < level))[0]
    if idx.size == 0:
        return math.nan
    i = idx[-1]
    frac = (v[i] - level) / (v[i] - v[i + 1])
    return float(x[i] + frac * (x[i + 1] - x[i]))


def tail_state(x, v, front, wall_margin=5.0, buffer=50.0, osc_tol=OSCILLATION_TOL):
    """Classify the state between the left wall and ``front - buffer``.

    Returns the label and the half peak-to-peak amplitude there.
    """
    mask = (x > x[0] + wall_margin) & (x < front - buffer)
    if mask.sum() < 8:
        return "equilibrium", 0.0
    seg = v[mask]
    amp = 0.5 * float(np.ptp(seg))
    if amp <= osc_tol:
        return "equilibrium", amp
    peaks = np.where((seg[1:-1] > seg[:-2]) & (seg[1:-1] >= seg[2:]))[0] + 1
    if peaks.size >= 2:
        gaps = np.diff(peaks)
        if gaps.size == 0 or gaps.std() <= 0.25 * gaps.mean():
            return "periodic", amp
    return "irregular", amp


def front_initial(grid, x0):
    """``u = 1`` left of ``x0`` and ``0`` right of it, smoothed over two cells."""
    x = grid.x[0]
    return 0.5 * (1.0 - np.tanh((x - x0) / (2 * grid.h)))


def front_experiment(sigma, kernel=None, cfg=EvolutionConfig(), L=200.0, n=4096, x0=None, fit_window=None,
                     wall_margin=10.0, tail_buffer=50.0):
    """Release a step from ``x0`` and measure how the rightmost front moves.

    The box ``[-L, L)`` gets reflecting walls by even extension onto a periodic
    box of twice the length, so no second front enters through the periodic
    boundary. The speed is a least-squares fit of front positions over
    ``fit_window`` (default: second half of the run); points within
    ``wall_margin`` of the right wall are discarded and flagged as truncation.
    """
    phys = Grid(1, L, n)
    comp = Grid(1, 2 * L, 2 * n)
    x = phys.x[0]
    x0 = -L + 10.0 if x0 is None else float(x0)
    u_phys = front_initial(phys, x0)
    v = np.concatenate([u_phys, u_phys[::-1]])
    check_stability(cfg, v)
    stepper = Stepper(comp, sigma, kernel, cfg)
    times, fronts = [0.0], [front_position(x, u_phys, cfg.front_level)]
    for k in range(1, cfg.n_steps + 1):
        v = stepper(v)
        if k % cfg.record_every == 0 or k == cfg.n_steps:
            if not np.all(np.isfinite(v)):
                raise BlowUpError(k)
            times.append(k * cfg.dt)
            fronts.append(front_position(x, v[:n], cfg.front_level))
    times = np.array(times)
    fronts = np.array(fronts)
    lo, hi = fit_window if fit_window is not None else (cfg.t_end / 2, cfg.t_end)
    in_window = (times >= lo - 1e-9) & (times <= hi + 1e-9)
    usable = in_window & np.isfinite(fronts) & (fronts < L - wall_margin)
    truncated = bool(np.any(in_window & ~usable))
    if truncated:
        warnings.warn("front left the box during the fit window; partial fit", RuntimeWarning, stacklevel=2)
    speed = float(np.polyfit(times[usable], fronts[usable], 1)[0]) if usable.sum() >= 2 else math.nan
    final_vals = v[:n]
    last_front = front_position(x, final_vals, cfg.front_level)
    if not np.isfinite(last_front):
        last_front = L
    state, amp = tail_state(x, final_vals, last_front, buffer=tail_buffer)
    return FrontReport(times, fronts, speed, state, amp, (lo, hi), truncated, Field(phys, final_vals))
