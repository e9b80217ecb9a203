"""
Weighted norms and the convolution bound
========================================

With the weight (1 + |x|^2)^-l, convolving with a mass-one kernel can increase
the weighted L^p norm slightly. Mass is moved toward the origin, where the
weight is largest. The Jensen bound (max (phi * w) / w)^(1/p) always holds.
"""
import numpy as np

from nlfkpp import Grid, Kernel, scale
from nlfkpp.norms import XNormSpec, young_check, young_constant, x_norm
from nlfkpp.verification import young_counterexample_ratio, young_triples

print(f"nearly flat field, gaussian sigma=3: ratio {young_counterexample_ratio():.6f} > 1")

grid = Grid(1, 40.0, 512)
rows = []
for kernel, sigma, u in young_triples(np.random.default_rng(0), 100, grid):
    sk = scale(kernel, sigma)
    rows.append((young_check(sk, u), young_constant(sk, grid)))
ratios, consts = np.array(rows).T
print(f"random triples above 1: {(ratios > 1 + 1e-8).sum()}/100, max {ratios.max():.4f}")
print(f"max ratio / Jensen constant: {(ratios / consts).max():.6f}")

bump = Grid(1, 20.0, 1024).from_function(lambda x: np.exp(-x**2))
print(f"X-norm of a gaussian bump (k=0, p=2, l=1): {x_norm(bump, XNormSpec(0, 2.0, 1.0)):.6f}")
