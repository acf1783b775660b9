import csv

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from llg_lattice.dynamics import (EnergyTrace, IntegrationError, SolverConfig, State,
                                  discrete_energy, dissipation_residual, energy_density,
                                  energy_derivative, energy_rate, evolve, lagrange_multiplier,
                                  lambda_gradient_ratio, local_energy, rhs_heatflow, rhs_llg, step)
from llg_lattice.grid import Boundary, GridSpec, VectorField, difference
from llg_lattice.initial import (rotation_wave, smooth_random_field, smooth_sphere_data,
                                 tangent_perturbation)
from llg_lattice.target import Ellipsoid, Torus, UnitSphere

SPHERE = UnitSphere()


def sphere_field(n=16, seed=0, length=2 * np.pi, amplitude=1.0):
    spec = GridSpec(length / n, n, n)
    return smooth_sphere_data(spec, np.random.default_rng(seed), amplitude)


def test_energy_of_rotation_wave():
    # |D+- u|^2 = (2 sin(pi k / n) / h)^2 along axis 1, zero along axis 2
    spec = GridSpec(0.1, 16, 8)
    u = rotation_wave(spec, 1)
    d2 = (2 * np.sin(np.pi / 16) / 0.1) ** 2
    assert np.allclose(energy_density(u.values, spec), 0.5 * d2)
    assert discrete_energy(u) == pytest.approx(16 * 8 * 0.01 * 0.5 * d2)


def test_energy_derivative_matches_symmetric_difference(rng):
    u = sphere_field(12, 3)
    v = rng.normal(size=u.values.shape)
    eps = 1e-3
    # E is quadratic, so the symmetric difference is exact up to rounding
    fd = (discrete_energy(u.with_values(u.values + eps * v))
          - discrete_energy(u.with_values(u.values - eps * v))) / (2 * eps)
    assert energy_derivative(u, v) == pytest.approx(fd, rel=1e-9)


def test_energy_derivative_far_field():
    spec = GridSpec(0.25, 8, 8, Boundary.CONSTANT_FAR_FIELD)
    u = VectorField(spec, np.tile([0.0, 0.0, 1.0], (8, 8, 1)))
    v = np.zeros((8, 8, 3))
    v[3, 4] = [1.0, 0.0, 0.0]
    eps = 1e-4
    fd = (discrete_energy(u.with_values(u.values + eps * v))
          - discrete_energy(u.with_values(u.values - eps * v))) / (2 * eps)
    assert energy_derivative(u, v) == pytest.approx(fd, abs=1e-10)


def test_sphere_multiplier_equals_twice_energy_density():
    u = sphere_field(16, 1)
    lam = lagrange_multiplier(u, SPHERE).values
    assert np.allclose(lam, 2 * energy_density(u.values, u.spec), rtol=1e-10, atol=1e-12)


@pytest.mark.parametrize("surface", [SPHERE, Ellipsoid(1.0, 1.3, 0.9), Torus(2.0, 1.0)], ids=repr)
def test_right_hand_sides_are_tangent(surface):
    spec = GridSpec(2 * np.pi / 16, 16, 16)
    psi = smooth_random_field(spec, np.random.default_rng(2), 2, 2)
    psi /= np.abs(psi).max()
    base = surface.sample(1, np.random.default_rng(5))[0]
    u = tangent_perturbation(spec, surface, base, psi, 0.3)
    nu = surface.normal(u.values)
    cfg = SolverConfig(alpha=0.7, surface=surface)
    for rhs in (rhs_llg(u, cfg).values, rhs_heatflow(u, surface).values):
        scale = np.abs(rhs).max()
        assert np.abs(np.sum(rhs * nu, -1)).max() <= 1e-12 * scale


@given(st.floats(0.0, 5.0))
def test_llg_rate_identity_for_any_damping(alpha):
    u = sphere_field(8, 4)
    cfg = SolverConfig(alpha=alpha, surface=SPHERE)
    v = rhs_llg(u, cfg).values
    rate = energy_derivative(u, v)
    norm2 = u.spec.h**2 * np.sum(v * v)
    assert rate == pytest.approx(-alpha / (1 + alpha**2) * norm2, abs=1e-10 * (1 + norm2))


def test_heatflow_rate_identity():
    u = sphere_field(8, 4)
    v = rhs_heatflow(u, SPHERE).values
    assert energy_derivative(u, v) == pytest.approx(-u.spec.h**2 * np.sum(v * v), rel=1e-10)


def test_multiplier_bound_on_sampled_surfaces():
    # |lambda_j| <= C_N (|D+ u_j|^2 + |D- u_j|^2), half of the admissible 2 C_N
    for surface in (Ellipsoid(1.0, 1.3, 0.9), Torus(2.0, 1.0)):
        spec = GridSpec(0.1, 16, 16)
        psi = smooth_random_field(spec, np.random.default_rng(8), 2, 2)
        psi /= np.abs(psi).max()
        u = tangent_perturbation(spec, surface, surface.sample(1, np.random.default_rng(1))[0], psi, 0.3)
        lam = np.abs(lagrange_multiplier(u, surface).values)
        grad2 = 4 * energy_density(u.values, spec)
        assert np.all(lam <= surface.quadratic_constant * grad2 + 1e-12)


def test_lambda_gradient_ratio_finite():
    assert np.isfinite(lambda_gradient_ratio(sphere_field(16, 2), SPHERE))


def test_evolve_lands_on_end_time_and_decays():
    u = sphere_field(16, 0)
    cfg = SolverConfig(alpha=1.0, surface=SPHERE, t_end=0.1, dt=0.013)
    state, trace = evolve(u, cfg, store_every=2)
    assert state.t == pytest.approx(0.1, abs=1e-15)
    assert len(trace.t) == 9
    assert np.all(np.diff(trace.energy) < 0)
    assert [s.t for s in trace.states] == pytest.approx([0.0, 0.025, 0.05, 0.075, 0.1])
    assert np.abs(np.linalg.norm(state.u.values, axis=-1) - 1).max() < 1e-14
    assert dissipation_residual(trace, cfg.dissipation_coefficient).max() < 1e-9


def test_undamped_flow_conserves_energy():
    u = sphere_field(16, 0)
    cfg = SolverConfig(alpha=0.0, surface=SPHERE, t_end=0.1, cfl=0.0625)
    _, trace = evolve(u, cfg)
    e = np.array(trace.energy)
    assert np.abs(e - e[0]).max() / e[0] < 1e-6


def test_rk4_fourth_order():
    u = sphere_field(8, 0, amplitude=0.3)
    ref = evolve(u, SolverConfig(alpha=1.0, surface=SPHERE, t_end=0.2, dt=0.2 / 64))[0].u.values
    errs = [np.abs(evolve(u, SolverConfig(alpha=1.0, surface=SPHERE, t_end=0.2, dt=0.2 / n))[0].u.values
                   - ref).max() for n in (8, 16)]
    assert errs[0] / errs[1] > 12


def test_step_and_state():
    u = sphere_field(8, 0)
    s = step(State(0.0, u), SolverConfig(alpha=1.0, surface=SPHERE))
    assert s.t == pytest.approx(0.125 * u.spec.h**2 / 2)


def test_retraction_failure_is_reported():
    surface = Torus(2.0, 1.0)
    spec = GridSpec(0.2, 8, 8)
    psi = smooth_random_field(spec, np.random.default_rng(0), 2, 2)
    psi /= np.abs(psi).max()
    u = tangent_perturbation(spec, surface, [3.0, 0, 0], psi, 0.8)
    with pytest.raises(IntegrationError, match="node"):
        evolve(u, SolverConfig(alpha=1.0, surface=surface, t_end=1.0, dt=50 * spec.h**2))


def test_config_validation():
    for kwargs, field in [({"alpha": -1}, "alpha"), ({"alpha": 1, "cfl": 0.5}, "cfl"),
                          ({"alpha": 1, "dt": 0.0}, "dt"), ({"alpha": 1, "model": "x"}, "model"),
                          ({"alpha": 1, "projection": "x"}, "projection")]:
        with pytest.raises(ValueError, match=f"^{field}:"):
            SolverConfig(surface=SPHERE, **kwargs)
    assert SolverConfig(alpha=1, surface=SPHERE, model="heatflow").dissipation_coefficient == 1.0
    assert SolverConfig(alpha=2, surface=SPHERE).dissipation_coefficient == pytest.approx(0.4)


def test_energy_rate_exact_on_quartics():
    t = np.linspace(0, 1, 11)
    e = 3 * t**4 - t**3 + 2 * t
    assert np.allclose(energy_rate(t, e), 12 * t**3 - 3 * t**2 + 2, atol=1e-10)
    with pytest.raises(ValueError):
        energy_rate(t[:4], e[:4])


def test_trace_csv_and_monotone_time(tmp_path):
    tr = EnergyTrace()
    tr.append(0.0, 1.0, 0.5, 0.0)
    tr.append(0.1, 0.9, 0.4, 1e-17)
    with pytest.raises(ValueError):
        tr.append(0.1, 0.8, 0.3, 0.0)
    tr.write_csv(tmp_path / "e.csv")
    rows = list(csv.reader(open(tmp_path / "e.csv")))
    assert rows[0] == ["t", "energy", "dissipation", "max_offmanifold"]
    assert float(rows[2][1]) == 0.9


def test_local_energy():
    spec = GridSpec(0.1, 16, 16)
    u = rotation_wave(spec, 1)
    total = discrete_energy(u)
    assert local_energy(u, (8, 8), 10.0) == pytest.approx(total)
    assert local_energy(u, (8, 8), 0.25) == pytest.approx(total * 21 / 256)
    with pytest.raises(ValueError, match="^R:"):
        local_energy(u, (0, 0), 0.05)
