import numpy as np
import pytest
from hypothesis import given, strategies as st

from nlfkpp import Grid, GridMismatchError, Kernel, ParameterError
from nlfkpp.continuation import band_limited_seed
from nlfkpp.operator import (LinearOperatorTag, OperatorParams, jacobian_apply, linear_apply, residual, symbol,
                             taylor_remainder)
from nlfkpp.spectral import laplacian

KERNELS = [Kernel.gaussian(), Kernel.laplace(), Kernel.tophat()]


def test_params():
    p = OperatorParams(0.3, Kernel.gaussian())
    assert p.mu_equivalent == pytest.approx(0.09) and not p.local
    assert OperatorParams(0.0).local
    with pytest.raises(ParameterError):
        OperatorParams(-0.1, Kernel.gaussian())
    with pytest.raises(ParameterError):
        OperatorParams(0.3)


@pytest.mark.parametrize("kernel", KERNELS)
@pytest.mark.parametrize("sigma", [0.0, 0.1, 1.0])
def test_trivial_roots(kernel, sigma):
    g = Grid(1, 20.0, 1024)
    params = OperatorParams(sigma, kernel if sigma > 0 else None)
    assert residual(g.zeros(), params).sup_norm == 0.0
    assert residual(g.constant(1.0), params).sup_norm <= 1e-12


def test_local_cosine_residual():
    g = Grid(1, 20 * np.pi, 1024)
    u = g.from_function(np.cos)
    expected = g.from_function(lambda x: -np.cos(x) ** 2)
    assert (residual(u, OperatorParams(0.0)) - expected).sup_norm < 1e-11


def test_linearizations_at_trivial_states(grid1, rng):
    p0 = OperatorParams(0.0)
    for _ in range(5):
        U = band_limited_seed(grid1, rng, 1.0)
        assert (jacobian_apply(grid1.zeros(), p0, U) - (laplacian(U) + U)).sup_norm < 1e-12
        assert (jacobian_apply(grid1.constant(1.0), p0, U) - (laplacian(U) - U)).sup_norm < 1e-12


def test_jacobian_grid_mismatch():
    a, b = Grid(1, 20.0, 64), Grid(1, 20.0, 128)
    with pytest.raises(GridMismatchError):
        jacobian_apply(a.zeros(), OperatorParams(0.0), b.zeros())


@given(seed=st.integers(0, 2**32 - 1), sigma=st.floats(0.05, 2.0), ki=st.integers(0, 2))
def test_jacobian_against_central_differences(seed, sigma, ki):
    g = Grid(1, 40.0, 512)
    rng = np.random.default_rng(seed)
    params = OperatorParams(sigma, KERNELS[ki])
    u, U, V = (band_limited_seed(g, rng, 2.0) for _ in range(3))
    if U.sup_norm == 0:
        return
    U = U / U.sup_norm
    J = jacobian_apply(u, params, U)
    h = 1e-6
    fd = (residual(u + U * h, params) - residual(u - U * h, params)) / (2 * h)
    assert (fd - J).sup_norm <= 1e-6 * max(J.sup_norm, 1e-8)
    both = jacobian_apply(u, params, U * 2.0 + V)
    assert (both - (J * 2.0 + jacobian_apply(u, params, V))).sup_norm <= 1e-11 * (1 + both.sup_norm)


@given(seed=st.integers(0, 2**32 - 1), sigma=st.floats(0.05, 2.0), ki=st.integers(0, 2))
def test_taylor_decomposition(seed, sigma, ki):
    g = Grid(1, 40.0, 512)
    params = OperatorParams(sigma, KERNELS[ki])
    u = band_limited_seed(g, np.random.default_rng(seed), 3.0)
    lhs = residual(u, params)
    rhs = laplacian(u) + u + taylor_remainder(u, params)
    assert (lhs - rhs).sup_norm <= 1e-11 * (1 + lhs.sup_norm)


def test_taylor_remainder_examples(grid1):
    params = OperatorParams(0.5, Kernel.gaussian())
    assert taylor_remainder(grid1.zeros(), params).sup_norm == 0.0
    assert (taylor_remainder(grid1.constant(1.0), params) + 1.0).sup_norm < 1e-15


def test_linear_operators_on_cosine():
    g = Grid(1, 20 * np.pi, 512)
    u = g.from_function(np.cos)
    assert linear_apply(LinearOperatorTag.L0(), u).sup_norm < 1e-12
    assert (linear_apply(LinearOperatorTag.L1(), u) + u * 2.0).sup_norm < 1e-12
    for alpha in (-0.19, 0.21, 0.44):
        k = np.sqrt(1 + alpha)
        v = g.from_function(lambda x: np.cos(k * x))
        assert linear_apply(LinearOperatorTag.L0_alpha(alpha), v).sup_norm < 1e-11
    with pytest.raises(ParameterError):
        LinearOperatorTag.L0_alpha(1.0)


def test_symbols():
    assert symbol(LinearOperatorTag.L1(), 0.0) == -1.0
    assert symbol(LinearOperatorTag.L1(), 1.0) == -2.0
    assert symbol(LinearOperatorTag.L0(), 1.0) == 0.0
    g = Grid(1, 20.0, 256)
    assert np.min(np.abs(symbol(LinearOperatorTag.L1(), np.sqrt(g.ksq)))) == 1.0


@pytest.mark.parametrize("tag", [LinearOperatorTag.L0(), LinearOperatorTag.L1(), LinearOperatorTag.L0_alpha(0.3)])
@pytest.mark.parametrize("d", [1, 2])
def test_pure_modes_are_eigenfunctions(tag, d):
    g = Grid(d, 10.0, 32)
    k = g.wavenumber(3)
    u = g.from_function((lambda x: np.sin(k * x)) if d == 1 else (lambda x1, x2: np.sin(k * x1) * np.cos(k * x2)))
    xi = k if d == 1 else np.sqrt(2) * k
    assert (linear_apply(tag, u) - u * float(symbol(tag, xi))).sup_norm < 1e-12
