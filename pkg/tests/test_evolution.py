import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nlfkpp import BlowUpError, Grid, Kernel, ParameterError
from nlfkpp.evolution import (EvolutionConfig, classify_attractor, dominant_period, front_position, run, step)


def logistic(c, t):
    return c * math.exp(t) / (1 - c + c * math.exp(t))


@pytest.mark.parametrize("c", [0.0, 1.0])
@pytest.mark.parametrize("integrator", ["imex_euler", "etd_rk2"])
def test_constant_equilibria_are_fixed(c, integrator):
    g = Grid(1, 10.0, 64)
    u = g.constant(c)
    out = step(u, 0.7, Kernel.gaussian(), EvolutionConfig(dt=0.05, integrator=integrator))
    assert np.max(np.abs(out.values - c)) <= 1e-14


@given(c=st.floats(0.05, 2.0))
def test_constant_data_follow_the_logistic_law(c):
    g = Grid(1, 10.0, 32)
    cfg = EvolutionConfig(dt=0.01, t_end=2.0, record_every=50, integrator="etd_rk2")
    res = run(g.constant(c), 0.5, Kernel.laplace(), cfg)
    assert res.final.values.mean() == pytest.approx(logistic(c, 2.0), rel=1e-4)
    assert np.ptp(res.final.values) < 1e-12


def test_self_convergence_orders():
    g = Grid(1, 20.0, 256)
    u0 = g.from_function(lambda x: 0.5 + 0.3 * np.cos(np.pi * x / 10))
    for integ, order in (("imex_euler", 1), ("etd_rk2", 2)):
        sols = [run(u0, 1.0, Kernel.gaussian(), EvolutionConfig(dt=dt, t_end=2.0, record_every=1000,
                                                                integrator=integ)).final.values
                for dt in (0.04, 0.02, 0.01, 0.005)]
        e1 = np.max(np.abs(sols[1] - sols[0]))
        e2 = np.max(np.abs(sols[3] - sols[2]))
        # the two differences are two halvings apart
        assert math.log(e1 / e2, 4) == pytest.approx(order, rel=0.2)


def test_local_problem_preserves_nonnegativity_and_bound():
    g = Grid(1, 20.0, 256)
    rng = np.random.default_rng(1)
    u0 = g.from_function(lambda x: np.clip(1 + 0.5 * np.sin(x) + 0.2 * rng.standard_normal(x.shape), 0, None))
    res = run(u0, 0.0, None, EvolutionConfig(dt=0.01, t_end=5.0, record_every=10))
    assert res.min_over_time >= -1e-12
    assert res.max.max() <= max(1.0, u0.max) + 1e-9


def test_localized_bump_invades_to_one():
    g = Grid(1, 20.0, 256)
    u0 = g.from_function(lambda x: 0.5 * np.exp(-x**2))
    res = run(u0, 0.0, None, EvolutionConfig(dt=0.02, t_end=60.0, record_every=50))
    assert np.max(np.abs(res.final.values - 1)) < 1e-6


def test_gaussian_noise_returns_to_one():
    g = Grid(1, 20.0, 256)
    rng = np.random.default_rng(2)
    u0 = g.from_function(lambda x: 1 + 0.05 * rng.standard_normal(x.shape))
    res = run(u0, 2.0, Kernel.gaussian(), EvolutionConfig(dt=0.02, t_end=60.0, record_every=50))
    assert res.attractor == "steady"
    assert np.max(np.abs(res.final.values - 1)) < 1e-8


def test_blow_up_is_reported():
    g = Grid(1, 10.0, 32)
    with pytest.raises(BlowUpError):
        run(g.constant(-1.0), 0.0, None, EvolutionConfig(dt=0.01, t_end=5.0))


def test_bad_steps_rejected():
    g = Grid(1, 10.0, 32)
    with pytest.raises(ParameterError):
        step(g.constant(1.0), 0.0, None, EvolutionConfig(dt=1.0))
    with pytest.raises(ParameterError):
        EvolutionConfig(dt=-0.1)
    with pytest.raises(ParameterError):
        EvolutionConfig(integrator="rk4")


def test_attractor_labels():
    t = np.arange(400)
    assert classify_attractor(np.ones(50), 0.0) == "steady"
    assert classify_attractor(1 + 1e-9 * np.exp(-t / 100), 1e-9) == "steady"
    assert classify_attractor(1 + 1e-3 * t, 1e-3) == "irregular"
    assert classify_attractor(1 + 0.1 * np.sin(t / 5), 1e-3) == "periodic"
    assert classify_attractor(np.random.default_rng(0).random(400), 1e-3) == "irregular"


def test_front_position_and_period():
    x = np.linspace(0, 10, 101)
    assert front_position(x, 1 - x / 10, 0.5) == pytest.approx(5.0)
    assert math.isnan(front_position(x, np.ones_like(x), 0.5))
    g = Grid(1, 20.0, 256)
    assert dominant_period(g.from_function(lambda x: np.cos(np.pi * x / 5))) == pytest.approx(10.0)
    assert dominant_period(g.constant(2.0)) == math.inf


def test_csv_headers(tmp_path):
    g = Grid(1, 10.0, 32)
    res = run(g.constant(0.5), 0.0, None, EvolutionConfig(dt=0.1, t_end=1.0, record_every=5))
    res.to_csv(tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "t,sup_norm,min,max,mass"
    assert len(lines) == 1 + len(res.times)
