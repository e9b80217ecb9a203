"""
Pattern onset for a kernel with a sign-changing transform
=========================================================

The top-hat kernel destabilizes u = 1 once sigma exceeds sigma*. Past it, noise
grows into a stationary pattern whose wavelength the dispersion relation predicts.
"""
import math

import numpy as np

from nlfkpp import Grid, Kernel
from nlfkpp.continuation import dispersion, find_sigma_star
from nlfkpp.evolution import EvolutionConfig, dominant_period, run

kernel = Kernel.tophat()
star = find_sigma_star(kernel)
print(f"sigma* = {star:.6f}")
for factor in (0.5, 1.0, 1.5, 2.0):
    c = dispersion(factor * star, kernel)
    print(f"  {factor} sigma*: max growth {c.max_lambda:+.5f} at xi = {c.argmax_xi:.4f}")

sigma = 1.5 * star
curve = dispersion(sigma, kernel)
grid = Grid(1, 100.0, 512)
u0 = grid.field(1.0 + 0.01 * np.random.default_rng(0).standard_normal(grid.shape))
res = run(u0, sigma, kernel, EvolutionConfig(dt=0.01, t_end=1000.0, record_every=1000))
print(f"attractor: {res.attractor}, min {res.final.min:.4f}, max {res.final.max:.4f}")
print(f"period {dominant_period(res.final):.3f}, predicted {2 * math.pi / curve.argmax_xi:.3f}")
