"""Command-line harness: ``nlfkpp <command> [--config PATH] [--out DIR] [--seed N] [--threads N]``.

Configuration is INI text with one section per command plus shared ``[kernel]``,
``[grid]`` and ``[solver]`` sections. Every run writes ``manifest.json`` next to
its datasets with the fully resolved configuration.
"""
from __future__ import annotations

import argparse
import configparser
import json
import math
import sys
import warnings
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .continuation import StepConfig, continue_branch, dispersion, find_sigma_star, sweep_uniqueness
from .errors import InputError, KernelAssumptionError, NLFKPPError, ParameterError
from .evolution import EvolutionConfig, dominant_period, front_experiment, run
from .kernel import Kernel, load_tabulated, validate
from .norms import WeightedSpaceSpec, XNormSpec, norm_report, x_norm
from .spectral import Grid, read_field, write_field
from .steady import DeflationConfig, SolverConfig, deflated_search, newton_solve
from .verification import run_checks, suite_failed

EXIT_OK, EXIT_CHECK_FAILED, EXIT_INPUT = 0, 1, 2

DEFAULTS = {
    "run": {"seed": "0", "threads": "1"},
    "kernel": {"family": "gaussian", "path": "", "renormalize": "false"},
    "grid": {"d": "1", "L": "20", "n": "512"},
    "solver": {"newton_tol": "1e-10", "max_newton": "50", "krylov_tol": "1e-8", "max_krylov": "200"},
    "verify": {"weight": "polynomial", "n_young": "20"},
    "steady": {"sigma": "0.1", "initial": "one", "perturbation": "0.1", "n_seeds": "0", "K": "10"},
    "continue": {"sigma_start": "0.5", "sigma_end": "0.0", "initial": "one", "perturbation": "0.0",
                 "ds": "0.05", "ds_max": "0.5", "max_points": "200"},
    "sweep": {"sigmas": "0.05, 0.1, 0.2", "n_seeds": "50", "K": "10"},
    "evolve": {"mode": "front", "sigma": "0", "sigma_factor": "", "dt": "0.01", "t_end": "150",
               "integrator": "imex_euler", "record_every": "100", "noise": "0.01",
               "front_L": "200", "front_n": "4096", "fit_start": "50", "fit_end": "150"},
    "dispersion": {"sigmas": "0, 5, 10, 15, 20, 25, 30", "xi_max": "4"},
    "norms": {"field": "gaussian_bump", "k": "0", "p": "2", "l": "1"},
}

EXPERIMENTS = {
    "verify": "operator identities, invertibility and weighted inequality checks",
    "steady": "steady-state root search by Newton-Krylov with deflation",
    "continue": "pseudo-arclength continuation of a steady branch in sigma",
    "sweep": "small-sigma uniqueness sweep over random seeds",
    "evolve": "time evolution: attractor or front propagation",
    "dispersion": "linear stability of u = 1 and the onset sigma*",
    "norms": "weighted Sobolev and X norms of a field",
}


class Context:
    def __init__(self, command, cfg, out, seed, threads):
        self.command = command
        self.cfg = cfg
        self.out = out
        self.seed = seed
        self.threads = threads
        self.outputs = []

    def get(self, section, key):
        return self.cfg[section][key]

    def num(self, section, key, kind=float):
        raw = self.get(section, key)
        try:
            return kind(raw)
        except ValueError:
            raise InputError(f"[{section}] {key} = {raw!r} is not a valid {kind.__name__}") from None

    def floats(self, section, key):
        raw = self.get(section, key)
        try:
            return [float(v) for v in raw.replace(",", " ").split()]
        except ValueError:
            raise InputError(f"[{section}] {key} = {raw!r} is not a list of numbers") from None

    def path(self, name):
        p = self.out / name
        p.parent.mkdir(parents=True, exist_ok=True)
        self.outputs.append(name)
        return p

    def grid(self):
        return Grid(self.num("grid", "d", int), self.num("grid", "L"), self.num("grid", "n", int))

    def kernel(self, d=None):
        family = self.get("kernel", "family").strip().lower()
        d = self.num("grid", "d", int) if d is None else d
        if family == "tabulated":
            path = self.get("kernel", "path")
            if not path:
                raise InputError("[kernel] family = tabulated needs a path")
            renorm = self.cfg.getboolean("kernel", "renormalize")
            kernel = load_tabulated(path, renormalize=renorm)
        elif family in ("gaussian", "laplace", "tophat"):
            kernel = getattr(Kernel, family)(d)
        else:
            raise InputError(f"unknown kernel family {family!r}")
        validate(kernel)
        return kernel

    def solver(self):
        return SolverConfig(newton_tol=self.num("solver", "newton_tol"), max_newton=self.num("solver", "max_newton", int),
                            krylov_tol=self.num("solver", "krylov_tol"), max_krylov=self.num("solver", "max_krylov", int))

    def write_json_lines(self, name, records):
        with open(self.path(name), "w") as fh:
            for rec in records:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")

    def write_manifest(self, status):
        resolved = {s: dict(self.cfg[s]) for s in self.cfg.sections()}
        manifest = {
            "experiment": EXPERIMENTS[self.command],
            "command": self.command,
            "version": __version__,
            "seed": self.seed,
            "threads": self.threads,
            "rng": "numpy PCG64 streams spawned by SeedSequence(seed)",
            "config": resolved,
            "outputs": self.outputs,
            "exit_code": status,
            "created": datetime.now(timezone.utc).isoformat(),
        }
        (self.out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _initial(ctx, grid, section, rng):
    raw = ctx.get(section, "initial").strip()
    kind = raw.lower()
    amp = ctx.num(section, "perturbation")
    if kind in ("one", "zero"):
        base = 1.0 if kind == "one" else 0.0
        return grid.from_function(lambda x1, *_: base + amp * np.cos(np.pi * x1 / grid.L))
    if kind == "noise":
        return grid.field(1.0 + amp * rng.standard_normal(grid.shape))
    path = Path(raw)
    if path.is_file():
        u = read_field(path)
        if u.grid != grid:
            raise InputError(f"field {path} is on {u.grid}, config grid is {grid}")
        return u
    raise InputError(f"[{section}] initial must be one, zero, noise or a field file, got {kind!r}")


# -- commands --------------------------------------------------------------------

def cmd_verify(ctx):
    reports = run_checks(weight=ctx.get("verify", "weight").strip(), seed=ctx.seed,
                         n_young=ctx.num("verify", "n_young", int))
    with open(ctx.path("checks.jsonl"), "w") as fh:
        for r in reports:
            fh.write(r.to_json() + "\n")
    failed = suite_failed(reports)
    for r in reports:
        print(f"{r.metrics['status']:>24}  {r.check_name}")
    if failed:
        print("failing checks: " + ", ".join(failed), file=sys.stderr)
        return EXIT_CHECK_FAILED
    return EXIT_OK


def _root_records(ctx, roots, prefix):
    records = []
    for i, sol in enumerate(roots):
        name = f"fields/{prefix}_{i:03d}.bin"
        write_field(ctx.path(name), sol.u)
        rec = sol.to_record(name)
        rec["converged"] = sol.converged
        records.append(rec)
    return records


def cmd_steady(ctx):
    grid = ctx.grid()
    sigma = ctx.num("steady", "sigma")
    kernel = ctx.kernel() if sigma > 0 else None
    cfg = ctx.solver()
    rng = np.random.default_rng(np.random.SeedSequence(ctx.seed))
    n_seeds = ctx.num("steady", "n_seeds", int)
    if n_seeds > 0:
        from .continuation import band_limited_seed

        K = ctx.num("steady", "K")
        seeds = [band_limited_seed(grid, rng, K) for _ in range(n_seeds)]
        search = deflated_search(sigma, kernel, seeds, cfg, DeflationConfig(), K_cap=K)
        records = _root_records(ctx, search.roots, "root") + _root_records(ctx, search.unconverged, "unconverged")
        print(f"sigma={sigma}: {len(search.roots)} roots, {len(search.unconverged)} unconverged seeds")
    else:
        sol = newton_solve(_initial(ctx, grid, "steady", rng), sigma, kernel, cfg)
        records = _root_records(ctx, [sol], "root")
        print(f"sigma={sigma}: {sol.classification} converged={sol.converged} residual={sol.residual_norm:.3e}")
    ctx.write_json_lines("roots.jsonl", records)
    return EXIT_OK


def cmd_continue(ctx):
    grid = ctx.grid()
    s0, s1 = ctx.num("continue", "sigma_start"), ctx.num("continue", "sigma_end")
    kernel = ctx.kernel()
    cfg = ctx.solver()
    rng = np.random.default_rng(np.random.SeedSequence(ctx.seed))
    start = newton_solve(_initial(ctx, grid, "continue", rng), s0, kernel if s0 > 0 else None, cfg)
    if not start.converged:
        print(f"starting point at sigma={s0} did not converge; branch not traced", file=sys.stderr)
        with open(ctx.path("branch.csv"), "w") as fh:
            fh.write("sigma,classification,x_norm,sup_norm,min_value,max_dispersion,arclength\n")
        return EXIT_OK
    step = StepConfig(ds=ctx.num("continue", "ds"), ds_max=ctx.num("continue", "ds_max"),
                      max_points=ctx.num("continue", "max_points", int))
    branch = continue_branch(start, (s0, s1), kernel, step, cfg)
    branch.to_csv(ctx.path("branch.csv"))
    print(f"{len(branch.points)} points, {branch.reason}")
    return EXIT_OK


def cmd_sweep(ctx):
    grid = ctx.grid()
    kernel = ctx.kernel()
    K = ctx.num("sweep", "K")
    data = sweep_uniqueness(kernel, ctx.floats("sweep", "sigmas"), grid, n_seeds=ctx.num("sweep", "n_seeds", int),
                            rng_seed=ctx.seed, K_cap=K, cfg=ctx.solver(), threads=ctx.threads)
    data.to_csv(ctx.path("diagram.csv"))
    records = []
    for search in data.searches:
        for kind, sols in (("root", search.roots), ("unconverged", search.unconverged), ("rejected", search.rejected)):
            for sol in sols:
                rec = sol.to_record("")
                rec["status"] = kind
                records.append(rec)
    ctx.write_json_lines("roots.jsonl", records)
    for search in data.searches:
        print(f"sigma={search.sigma}: {sorted(r.classification for r in search.roots)} "
              f"unconverged={len(search.unconverged)} rediscovered={search.rediscovered}")
    return EXIT_OK


def _evolve_sigma(ctx, kernel):
    factor = ctx.get("evolve", "sigma_factor").strip()
    if factor:
        star = find_sigma_star(kernel)
        if star is None:
            raise InputError("sigma_factor given but u = 1 never destabilizes for this kernel")
        return float(factor) * star
    return ctx.num("evolve", "sigma")


def cmd_evolve(ctx):
    kernel = ctx.kernel()
    sigma = _evolve_sigma(ctx, kernel)
    k = kernel if sigma > 0 else None
    cfg = EvolutionConfig(dt=ctx.num("evolve", "dt"), t_end=ctx.num("evolve", "t_end"),
                          record_every=ctx.num("evolve", "record_every", int),
                          integrator=ctx.get("evolve", "integrator").strip())
    mode = ctx.get("evolve", "mode").strip()
    if mode == "front":
        rep = front_experiment(sigma, k, cfg, L=ctx.num("evolve", "front_L"), n=ctx.num("evolve", "front_n", int),
                               fit_window=(ctx.num("evolve", "fit_start"), ctx.num("evolve", "fit_end")))
        rep.to_csv(ctx.path("front.csv"))
        summary = {"sigma": sigma, "fitted_speed": rep.fitted_speed, "tail_state": rep.tail_state,
                   "tail_amplitude": rep.tail_amplitude, "fit_window": list(rep.fit_window), "truncated": rep.truncated}
        ctx.path("front_summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
        print(f"sigma={sigma:.6g}: speed={rep.fitted_speed:.4f} tail={rep.tail_state}")
    elif mode == "trajectory":
        grid = ctx.grid()
        rng = np.random.default_rng(np.random.SeedSequence(ctx.seed))
        u0 = grid.field(1.0 + ctx.num("evolve", "noise") * rng.standard_normal(grid.shape))
        res = run(u0, sigma, k, cfg)
        res.to_csv(ctx.path("trajectory.csv"))
        write_field(ctx.path("final.bin"), res.final)
        print(f"sigma={sigma:.6g}: attractor={res.attractor} min={res.final.min:.4g} "
              f"period={dominant_period(res.final):.4g}")
    else:
        raise InputError(f"[evolve] mode must be front or trajectory, got {mode!r}")
    return EXIT_OK


def cmd_dispersion(ctx):
    kernel = ctx.kernel()
    xi_max = ctx.num("dispersion", "xi_max")
    rows = []
    for s in ctx.floats("dispersion", "sigmas"):
        c = dispersion(s, kernel, xi_max)
        rows.append(("scan", s, c.max_lambda, c.argmax_xi))
    star = find_sigma_star(kernel, xi_max=xi_max)
    if star is not None:
        c = dispersion(star, kernel, xi_max)
        rows.append(("sigma_star", star, c.max_lambda, c.argmax_xi))
    rows.sort(key=lambda r: r[1])
    with open(ctx.path("dispersion.csv"), "w") as fh:
        fh.write("kind,sigma,max_lambda,argmax_xi,predicted_period\n")
        for kind, s, lam, xi in rows:
            period = 2 * math.pi / xi if xi > 0 else math.inf
            fh.write(f"{kind},{s!r},{lam!r},{xi!r},{period!r}\n")
    print("sigma* = " + ("none in scanned range" if star is None else repr(star)))
    return EXIT_OK


def cmd_norms(ctx):
    source = ctx.get("norms", "field").strip()
    if source == "gaussian_bump":
        u = ctx.grid().from_function(lambda *xs: np.exp(-sum(x * x for x in xs)))
    elif source == "one":
        u = ctx.grid().constant(1.0)
    else:
        u = read_field(source)
    k, p, l = ctx.num("norms", "k", int), ctx.num("norms", "p"), ctx.num("norms", "l")
    spec = WeightedSpaceSpec(k, p, l)
    xs = XNormSpec(k, p, l)
    reps = [norm_report(u, spec), norm_report(u, xs.inner), norm_report(u, xs.outer)]
    records = [json.loads(r.to_json()) for r in reps]
    records.append({"name": f"X(k={k},p={p:g},l={l:g})", "value": x_norm(u, xs),
                    "tail_bound": max(r.tail_bound for r in reps[1:])})
    ctx.write_json_lines("norms.jsonl", records)
    for rec in records:
        print(f"{rec['name']}: {rec['value']:.6g} (tail {rec['tail_bound']:.2e})")
    return EXIT_OK


COMMANDS = {
    "verify": cmd_verify,
    "steady": cmd_steady,
    "continue": cmd_continue,
    "sweep": cmd_sweep,
    "evolve": cmd_evolve,
    "dispersion": cmd_dispersion,
    "norms": cmd_norms,
}


def load_config(path=None):
    cfg = configparser.ConfigParser()
    cfg.optionxform = str
    cfg.read_dict(DEFAULTS)
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise InputError(f"config file {path} not found")
        try:
            cfg.read(p)
        except configparser.Error as exc:
            raise InputError(f"config file {path}: {exc}") from None
    return cfg


def build_parser():
    parser = argparse.ArgumentParser(prog="nlfkpp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, help=EXPERIMENTS[name])
        sp.add_argument("--config", metavar="PATH")
        sp.add_argument("--out", metavar="DIR")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--threads", type=int)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg["run"]["seed"] = str(args.seed)
        if args.threads is not None:
            cfg["run"]["threads"] = str(args.threads)
        seed, threads = int(cfg["run"]["seed"]), int(cfg["run"]["threads"])
        if seed < 0 or threads < 1:
            raise InputError("seed must be >= 0 and threads >= 1")
        out = Path(args.out or f"nlfkpp-out/{args.command}")
        out.mkdir(parents=True, exist_ok=True)
        ctx = Context(args.command, cfg, out, seed, threads)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            status = COMMANDS[args.command](ctx)
    except (InputError, ParameterError, KernelAssumptionError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NLFKPPError, MemoryError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    ctx.write_manifest(status)
    return status


if __name__ == "__main__":
    sys.exit(main())
