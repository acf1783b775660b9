import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from llg_lattice.grid import Boundary, GridSpec, ScalarField, laplacian
from llg_lattice.kernels import (KernelError, _bessel_route, _half_kernel, apply_kernel,
                                 duhamel_solve, kernel_1d, kernel_d, poisson_log_weights,
                                 target_slope, verify_lplq)
from llg_lattice.presets import bessel_series, euler_heat

H = 1 / 64


def spectral_kernel_1d(n, h, t, coeff):
    """Periodic kernel on n nodes from the eigenvalues of the 1-D difference Laplacian."""
    k = np.arange(n)
    lam = 4 / h**2 * np.sin(np.pi * k / n) ** 2
    return np.fft.ifft(np.exp(-coeff * t * lam)) / h


@pytest.mark.parametrize("factor", [0.1, 1.0, 10.0, 100.0, 1e4])
def test_heat_mass_and_bessel_value(factor):
    k = kernel_1d(factor * H**2, H)
    assert abs(k.mass() - 1) <= 1e-12
    assert np.all(k.values > 0)
    assert np.allclose(k.values, k.values[::-1], rtol=0, atol=0)
    if factor <= 300:
        assert H * k.values[k.J] == pytest.approx(bessel_series(factor), rel=1e-12)
    else:
        # large-argument asymptotics e^{-2x} I_0(2x) ~ (4 pi x)^{-1/2} (1 + 1/(16 x))
        assert H * k.values[k.J] == pytest.approx((4 * math.pi * factor) ** -0.5
                                                  * (1 + 1 / (16 * factor)), rel=1e-8)


def test_bessel_series_oracle_values():
    # exp(-2x) I_0(2x) at x = 1: I_0(2) = 2.2795853023360673
    assert bessel_series(1.0) == pytest.approx(2.2795853023360673 * math.exp(-2), rel=1e-15)
    assert bessel_series(0.0) == 1.0
    with pytest.raises(ValueError):
        bessel_series(1e4)


@pytest.mark.parametrize("coeff", [1.0, 1 + 1j, 0.2 + 1j, 1j])
def test_kernel_matches_spectral_oracle(coeff):
    n, t = 64, 20 * H**2
    k = kernel_1d(t, H, coeff)
    folded = np.zeros(n, dtype=complex)
    np.add.at(folded, k.offsets % n, k.values)
    assert np.abs(folded - spectral_kernel_1d(n, H, t, coeff)).max() <= 1e-12 / H
    assert abs(k.mass() - 1) <= 1e-12


def test_complex_routes_agree():
    for z in (5 * (1 + 0.3j), 40 * (1 + 0.1j), 3 + 1j):
        assert 2 * (abs(z) - z.real) <= 4
        J = 30
        assert np.allclose(_half_kernel(complex(z), J), _bessel_route(complex(z), J),
                           rtol=0, atol=1e-14)


def test_poisson_log_weights_normalized():
    for z in (0.5, 30.0, 1e4):
        m = np.arange(0, int(z + 20 * math.sqrt(z) + 50))
        assert math.fsum(np.exp(poisson_log_weights(m, z))) == pytest.approx(1.0, abs=1e-13)
    m = np.arange(8)
    direct = np.array([-2.5 + k * math.log(2.5) - math.lgamma(k + 1) for k in m])
    assert np.allclose(poisson_log_weights(m, 2.5), direct, atol=1e-13)


@given(st.floats(0.1, 50.0), st.floats(0.1, 50.0))
def test_semigroup_property(a, b):
    ka, kb, kab = (kernel_1d(x * H**2, H) for x in (a, b, a + b))
    conv = H * np.convolve(ka.values, kb.values)
    mid = len(conv) // 2
    ref = kab.values
    m = min(kab.J, mid)
    assert np.allclose(conv[mid - m: mid + m + 1], ref[kab.J - m: kab.J + m + 1], atol=1e-12 / H)


def test_zero_time_is_delta():
    k = kernel_1d(0.0, H)
    assert k.J == 0 and k.values[0] == 1 / H


def test_apply_kernel_solves_semidiscrete_heat_equation():
    # Phi(t) f satisfies du/dt = Delta^h u: check with a centered difference in t
    spec = GridSpec(1 / 32, 32, 32)
    f = np.random.default_rng(3).normal(size=spec.shape)
    t, dt = 2 * spec.h**2, 1e-3 * spec.h**2
    u = [apply_kernel(kernel_d(s, spec.h), f, spec) for s in (t - dt, t, t + dt)]
    dudt = (u[2] - u[0]) / (2 * dt)
    assert np.abs(dudt - laplacian(u[1], spec)).max() <= 1e-5 * np.abs(dudt).max()


def test_apply_kernel_against_euler_oracle():
    spec = GridSpec(1 / 16, 16, 16)
    x, y = spec.coordinates()
    f = np.cos(2 * np.pi * x) + np.sin(4 * np.pi * y) * np.cos(2 * np.pi * x)
    t = spec.h**2
    exact = apply_kernel(kernel_d(t, spec.h), f, spec)
    euler = euler_heat(f, spec, t, t / 40000)
    assert np.linalg.norm(exact - euler) / np.linalg.norm(exact) < 1e-5


def test_apply_kernel_far_field_preserves_constant():
    spec = GridSpec(0.1, 16, 16, Boundary.CONSTANT_FAR_FIELD, far_field_scalar=2.0)
    out = apply_kernel(kernel_d(0.05, 0.1), np.full(spec.shape, 2.0), spec)
    assert np.allclose(out, 2.0, atol=1e-14)


def test_apply_kernel_field_roundtrip_and_errors():
    spec = GridSpec(0.1, 8, 8)
    u = ScalarField(spec, np.ones(spec.shape))
    out = apply_kernel(kernel_d(0.01, 0.1), u)
    assert isinstance(out, ScalarField) and np.allclose(out.values, 1.0)
    with pytest.raises(KernelError, match="spacing"):
        apply_kernel(kernel_d(0.01, 0.2), u)
    with pytest.raises(ValueError):
        apply_kernel(kernel_d(0.01, 0.1), np.ones((8, 8)))


def test_kernel_argument_errors():
    with pytest.raises(KernelError, match="^t:"):
        kernel_1d(-1.0, H)
    with pytest.raises(KernelError, match="^h:"):
        kernel_1d(1.0, 0.0)
    with pytest.raises(KernelError, match="^coeff:"):
        kernel_1d(1.0, H, -1 + 1j)


def test_duhamel_constant_forcing_is_exact():
    spec = GridSpec(0.1, 8, 8)
    times = np.linspace(0, 0.02, 5)
    forcing = np.full((4, 8, 8), 3.0)
    out = duhamel_solve(np.zeros(spec.shape), forcing, 1.0, times, spec)
    assert np.allclose(out, 0.06, atol=1e-15)
    node_forcing = np.full((5, 8, 8), 3.0)
    assert np.allclose(duhamel_solve(np.zeros(spec.shape), node_forcing, 1.0, times, spec), out)
    with pytest.raises(ValueError, match="forcing"):
        duhamel_solve(np.zeros(spec.shape), forcing[:2], 1.0, times, spec)
    with pytest.raises(ValueError, match="times"):
        duhamel_solve(np.zeros(spec.shape), forcing, 1.0, [0, 0.1, 0.3, 0.35, 0.4], spec)


def test_duhamel_eigenmode_oracle():
    # forcing = mode with eigenvalue -mu: u(T) = (1 - e^{-mu T}) / mu * mode
    spec = GridSpec(1 / 16, 16, 16)
    x, _ = spec.coordinates()
    mode = np.cos(2 * np.pi * x)
    mu = 4 / spec.h**2 * np.sin(np.pi / 16) ** 2
    T = 0.01
    times = np.linspace(0, T, 201)
    out = duhamel_solve(np.zeros(spec.shape), np.repeat(mode[None], 200, 0), 1.0, times, spec)
    exact = (1 - math.exp(-mu * T)) / mu * mode
    assert np.abs(out - exact).max() <= 1e-6 * np.abs(exact).max()


def test_target_slopes():
    assert target_slope(math.inf, 1, 0) == -1.0
    assert target_slope(math.inf, 1, 1) == -1.5
    assert target_slope(2, 2, 0) == 0.0


@pytest.mark.parametrize("coeff", [1.0, 1 + 1j])
def test_decay_slopes(coeff):
    assert verify_lplq(coeff, H, math.inf, 1, 0).slope == pytest.approx(-1.0, abs=0.05)
    assert verify_lplq(coeff, H, math.inf, 1, 1).slope == pytest.approx(-1.5, abs=0.05)


def test_verify_lplq_rejects_bad_input():
    with pytest.raises(KernelError):
        verify_lplq(1j, H, math.inf, 1)
    with pytest.raises(KernelError):
        verify_lplq(1.0, H, 1, 2)
    with pytest.raises(KernelError):
        verify_lplq(1.0, H, math.inf, 1, n_samples=5)


def test_estimate_report_csv(tmp_path):
    rep = verify_lplq(1.0, H, math.inf, 1)
    rep.write_csv(tmp_path / "r.csv")
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == "t,norm" and len(lines) == 14 and lines[-1].startswith("# {")
