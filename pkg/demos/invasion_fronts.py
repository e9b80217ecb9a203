"""
Invasion fronts
===============

A step released into the empty state moves at the linear spreading speed 2.
Behind it the local problem leaves the equilibrium u = 1; past the pattern
onset the nonlocal problem leaves a periodic wake.
"""
from nlfkpp import Kernel
from nlfkpp.continuation import find_sigma_star
from nlfkpp.evolution import EvolutionConfig, front_experiment

cfg = EvolutionConfig(dt=0.01, t_end=150.0, record_every=100)
kernel = Kernel.tophat()
for label, sigma, k in (("local", 0.0, None), ("1.5 sigma*", 1.5 * find_sigma_star(kernel), kernel)):
    rep = front_experiment(sigma, k, cfg, L=200.0, n=4096, fit_window=(50.0, 150.0))
    print(f"{label:>11}: speed {rep.fitted_speed:.4f}, wake {rep.tail_state} "
          f"(half amplitude {rep.tail_amplitude:.3g})")
