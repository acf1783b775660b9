import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from llg_lattice.target import (Ellipsoid, NoGlobalFrameError, OffManifoldError, ProjectionError,
                                Torus, UnitSphere, surface_from_string)

SURFACES = [UnitSphere(), Ellipsoid(1.0, 1.5, 0.8), Torus(2.0, 1.0)]
coord = st.floats(-0.15, 0.15, allow_nan=False)


@pytest.mark.parametrize("surface", SURFACES, ids=repr)
def test_projection_lands_on_surface_along_normal(surface, rng):
    p = surface.sample(200, rng)
    nu = surface.normal(p)
    x = p + 0.3 * surface.tube_radius * rng.uniform(-1, 1, (200, 1)) * nu
    q = surface.closest_point(x)
    surface.check_on_surface(q)
    # x - q is normal at q
    d = x - q
    assert np.allclose(np.cross(d, surface.normal(q)), 0.0, atol=1e-9)
    assert np.allclose(q, p, atol=1e-9)


def test_ellipsoid_projection_against_brute_force_distance(rng):
    e = Ellipsoid(1.0, 1.5, 0.8)
    th, ph = np.meshgrid(np.linspace(0, np.pi, 1201), np.linspace(0, 2 * np.pi, 2401), indexing="ij")
    mesh = np.stack([np.sin(th) * np.cos(ph), 1.5 * np.sin(th) * np.sin(ph), 0.8 * np.cos(th)], -1)
    mesh = mesh.reshape(-1, 3)
    for x in e.sample(5, rng) * 1.1:
        q = e.closest_point(x)
        brute = np.min(np.linalg.norm(mesh - x, axis=-1))
        assert np.linalg.norm(x - q) == pytest.approx(brute, abs=2e-5)


@given(coord, coord, coord)
def test_sphere_projection_is_idempotent(a, b, c):
    s = UnitSphere()
    x = np.array([1.0 + a, b, c])
    p = s.closest_point(x)
    assert np.allclose(s.closest_point(p), p, atol=1e-15)
    assert np.linalg.norm(p) == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("surface", SURFACES, ids=repr)
def test_tangent_projection(surface, rng):
    p = surface.sample(50, rng)
    v = rng.normal(size=(50, 3))
    t = surface.tangent_project(p, v)
    assert np.allclose(np.sum(t * surface.normal(p), -1), 0.0, atol=1e-14)


@pytest.mark.parametrize("surface", SURFACES, ids=repr)
def test_quadratic_constant_bounds_normal_offsets(surface, rng):
    u, v = surface.sample_pairs(5000, rng)
    d = v - u
    assert np.all(np.abs(np.sum(d * surface.normal(u), -1)) <= surface.quadratic_constant * np.sum(d * d, -1) * (1 + 1e-9))


def test_sphere_constants_are_exact():
    s = UnitSphere()
    assert s.curvature_bound == 1.0
    assert s.quadratic_constant == 0.5
    assert s.delta_n == 1.0


def test_torus_frame_and_constants(rng):
    t = Torus(2.0, 1.0)
    assert t.curvature_bound == 1.0
    assert t.frame_bound == 1.0
    p = t.sample(100, rng)
    e1, e2 = t.global_frame(p)
    nu = t.normal(p)
    assert np.allclose(np.linalg.norm(e1, axis=-1), 1)
    assert np.allclose(np.sum(e1 * nu, -1), 0, atol=1e-14)
    assert np.allclose(e2, np.cross(nu, e1))


def test_errors():
    with pytest.raises(OffManifoldError, match="index"):
        UnitSphere().check_on_surface(np.array([[1.0, 0, 0], [1.1, 0, 0]]))
    with pytest.raises(ProjectionError):
        UnitSphere().closest_point(np.array([np.nan, 0, 0]))
    with pytest.raises(ProjectionError):
        Torus(2.0, 1.0).closest_point(np.array([0.0, 0.0, 0.0]))
    with pytest.raises(NoGlobalFrameError):
        UnitSphere().global_frame(np.array([1.0, 0, 0]))
    with pytest.raises(ValueError):
        Torus(1.0, 2.0)


def test_surface_parsing():
    assert isinstance(surface_from_string("sphere"), UnitSphere)
    assert isinstance(surface_from_string("Ellipsoid: 1, 2, 3"), Ellipsoid)
    assert surface_from_string("torus:3,1").major == 3.0
    for bad in ("cube", "torus:1", "ellipsoid:a,b,c"):
        with pytest.raises(ValueError, match="^surface:"):
            surface_from_string(bad)
