"""
Uniqueness of nonnegative steady states for small sigma
=======================================================

Deflated Newton-Krylov from random band-limited seeds. For a positive kernel at
small sigma, every nonnegative root found is 0 or 1; the rest change sign.
"""
import numpy as np

from nlfkpp import Grid, Kernel
from nlfkpp.continuation import StepConfig, continue_branch, sweep_uniqueness
from nlfkpp.steady import newton_solve

grid = Grid(1, 20.0, 512)
data = sweep_uniqueness(Kernel.gaussian(), [0.0, 0.05, 0.1, 0.2], grid, n_seeds=20, rng_seed=0)
for search in data.searches:
    kinds = sorted(r.classification for r in search.roots)
    print(f"sigma={search.sigma:<5} roots={kinds} unconverged={len(search.unconverged)}")

# the sign-changing roots dip well below zero
worst = min(r.min_value for s in data.searches for r in s.roots)
print(f"lowest value over all roots: {worst:.3f}")

# u = 1 continues flat from sigma = 0.5 down to the local problem
start = newton_solve(grid.constant(1.0), 0.5, Kernel.gaussian())
branch = continue_branch(start, (0.5, 0.0), Kernel.gaussian(), StepConfig(ds=0.1))
print("branch of u = 1:", np.round(branch.sigmas, 3), "x-norm spread", np.ptp(branch.x_norms))
