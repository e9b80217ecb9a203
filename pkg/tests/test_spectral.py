import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nlfkpp import (DomainTooSmallWarning, Field, Grid, GridMismatchError, InputError, Kernel, ParameterError,
                    convolve, dealias, laplacian, read_field, scale, write_field)
from nlfkpp.spectral import derivative, write_field_csv


def test_grid_invariants():
    g = Grid(1, 20.0, 512)
    assert g.h * g.n == pytest.approx(2 * g.L)
    assert g.x[0][0] == -20.0 and g.x[0][-1] < 20.0
    with pytest.raises(ParameterError):
        Grid(1, 20.0, 500)
    with pytest.raises(ParameterError):
        Grid(3, 20.0, 64)
    with pytest.raises(ParameterError):
        Grid(1, -1.0, 64)


def test_field_rejects_non_finite_and_bad_shape(grid1):
    with pytest.raises(InputError):
        Field(grid1, np.full(grid1.shape, np.nan))
    with pytest.raises(InputError):
        Field(grid1, np.zeros(7))


def test_fields_on_different_grids_do_not_mix():
    a = Grid(1, 20.0, 64).zeros()
    b = Grid(1, 10.0, 64).zeros()
    with pytest.raises(GridMismatchError):
        a + b


def test_laplacian_examples():
    g = Grid(1, 20.0, 256)
    assert laplacian(g.constant(3.0)).sup_norm < 1e-13
    k = g.wavenumber(7)
    u = g.from_function(lambda x: np.cos(k * x))
    assert (laplacian(u) + u * k * k).sup_norm < 1e-12
    g2 = Grid(2, 10.0, 64)
    k0, k1 = g2.wavenumber(3), g2.wavenumber(5)
    u = g2.from_function(lambda x1, x2: np.cos(k0 * x1) * np.cos(k1 * x2))
    assert (laplacian(u) + u * (k0**2 + k1**2)).sup_norm < 1e-12


def test_convolve_constants_and_gaussian_attenuation():
    g = Grid(1, 20.0, 512)
    sk = scale(Kernel.gaussian(), 0.7)
    assert (convolve(sk, g.constant(1.0)) - 1.0).sup_norm < 1e-15
    k = g.wavenumber(9)
    u = g.from_function(lambda x: np.cos(k * x))
    # quadrature oracle for int phi_sigma(y) cos(k (x - y)) dy at x = 0
    from scipy import integrate

    q = integrate.quad(lambda y: float(sk.evaluate(y)) * math.cos(k * y), -15, 15, limit=200)[0]
    assert q == pytest.approx(math.exp(-(0.7 * k) ** 2 / 2), rel=1e-10)
    assert (convolve(sk, u) - u * q).sup_norm < 1e-12


def test_convolve_tends_to_identity_as_sigma_shrinks():
    g = Grid(1, 20.0, 512)
    u = g.from_function(lambda x: np.exp(-x * x / 4))
    errs = [(convolve(scale(Kernel.laplace(), s), u) - u).sup_norm for s in (1e-1, 1e-2, 1e-3)]
    assert errs[0] > errs[1] > errs[2] and errs[2] < 1e-6


def test_domain_too_small_flag():
    g = Grid(1, 5.0, 128)
    with pytest.warns(DomainTooSmallWarning):
        out = convolve(scale(Kernel.gaussian(), 3.0), g.constant(1.0))
    assert out.warnings


def test_dealias_examples():
    g = Grid(1, 10.0, 128)
    u = g.from_function(lambda x: np.cos(g.wavenumber(5) * x))
    assert (dealias(u) - u).sup_norm < 1e-14
    nyq = g.field(np.cos(np.pi * np.arange(g.n)))
    assert dealias(nyq).sup_norm < 1e-14
    v = g.field(np.random.default_rng(0).standard_normal(g.n))
    assert (dealias(dealias(v)) - dealias(v)).sup_norm < 1e-14


@given(seed=st.integers(0, 2**32 - 1), a=st.floats(-5, 5), b=st.floats(-5, 5), shift=st.integers(0, 63))
def test_linearity_translation_mean(seed, a, b, shift):
    g = Grid(1, 10.0, 64)
    rng = np.random.default_rng(seed)
    u, v = g.field(rng.standard_normal(64)), g.field(rng.standard_normal(64))
    assert np.allclose(g.ifft(g.fft(u.values)), u.values, rtol=0, atol=1e-12 * max(1, u.sup_norm))
    lhs = laplacian(u * a + v * b)
    rhs = laplacian(u) * a + laplacian(v) * b
    assert (lhs - rhs).sup_norm <= 1e-11 * (1 + lhs.sup_norm)
    sk = scale(Kernel.tophat(), 1.3)
    cu = convolve(sk, u)
    shifted = convolve(sk, g.field(np.roll(u.values, shift)))
    assert np.allclose(shifted.values, np.roll(cu.values, shift), atol=1e-12)
    assert cu.mean == pytest.approx(u.mean, abs=1e-14)


def test_refinement_consistency():
    f = lambda x: np.exp(-x * x / 2) * np.cos(x)
    sk = scale(Kernel.gaussian(), 0.5)
    coarse, fine = Grid(1, 20.0, 256), Grid(1, 20.0, 512)
    uc, uf = coarse.from_function(f), fine.from_function(f)
    for op in (laplacian, lambda u: convolve(sk, u)):
        a, b = op(uc).values, op(uf).values[::2]
        assert np.max(np.abs(a - b)) < 1e-10


def test_derivative_of_sine():
    g = Grid(1, math.pi, 64)
    u = g.from_function(np.sin)
    assert np.allclose(derivative(u, (1,)).values, np.cos(g.x[0]), atol=1e-13)
    assert np.allclose(derivative(u, (2,)).values, -np.sin(g.x[0]), atol=1e-12)


def test_field_file_round_trip(tmp_path):
    g = Grid(2, 3.0, 16)
    u = g.field(np.random.default_rng(1).standard_normal(g.shape))
    p = tmp_path / "u.bin"
    write_field(p, u)
    header, _, payload = p.read_bytes().partition(b"\n")
    assert header.startswith(b"{") and len(payload) == 8 * g.n**2
    back = read_field(p)
    assert back.grid == g and np.array_equal(back.values, u.values)
    write_field_csv(tmp_path / "u.csv", u)
    lines = (tmp_path / "u.csv").read_text().splitlines()
    assert lines[0] == "x1,x2,value" and len(lines) == 1 + g.n**2


def test_truncated_field_file_rejected(tmp_path):
    p = tmp_path / "bad.bin"
    p.write_bytes(b'{"d": 1, "L": 1.0, "n": 8}\n' + b"\x00" * 10)
    with pytest.raises(InputError):
        read_field(p)
