"""Initial data generators for lattice runs."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .dynamics import discrete_energy
from .grid import GridSpec, VectorField
from .target import Hypersurface, UnitSphere

__all__ = [
    "smooth_random_field",
    "smooth_sphere_data",
    "sphere_data_with_energy",
    "tangent_perturbation",
    "equivariant_bubble",
    "rotation_wave",
]


def smooth_random_field(spec: GridSpec, rng: np.random.Generator, modes: int = 2,
                        components: int = 3) -> np.ndarray:
    """Random trigonometric polynomial with wave numbers ``|k_i| <= modes``.

    Periodic on the grid's extent; coefficients are standard normal scaled by
    ``1 / (1 + |k|^2)``.
    """
    x, y = spec.coordinates()
    lx, ly = spec.extent
    out = np.zeros((*spec.shape, components))
    for k1 in range(-modes, modes + 1):
        for k2 in range(-modes, modes + 1):
            if k1 == 0 and k2 == 0:
                continue
            phase = 2 * np.pi * (k1 * x / lx + k2 * y / ly)
            a = rng.normal(size=components) / (1.0 + k1 * k1 + k2 * k2)
            b = rng.normal(size=components) / (1.0 + k1 * k1 + k2 * k2)
            out += np.cos(phase)[..., None] * a + np.sin(phase)[..., None] * b
    return out


def smooth_sphere_data(spec: GridSpec, rng: np.random.Generator, amplitude: float = 1.0,
                       modes: int = 2) -> VectorField:
    """``(p + amplitude * g) / |p + amplitude * g|`` for random smooth ``g``.

    ``p`` is a random unit vector; the amplitude is capped so the numerator
    never vanishes.
    """
    g = smooth_random_field(spec, rng, modes)
    pole = rng.normal(size=3)
    pole /= np.linalg.norm(pole)
    gmax = np.max(np.linalg.norm(g, axis=-1))
    scale = min(amplitude, 0.9 / gmax) if gmax > 0 else 0.0
    v = pole + scale * g
    return VectorField(spec, v / np.linalg.norm(v, axis=-1, keepdims=True))


def sphere_data_with_energy(spec: GridSpec, rng: np.random.Generator, energy: float,
                            modes: int = 2) -> VectorField:
    """Smooth sphere-valued data ``normalize(p + s g)`` with ``E^h = energy``.

    ``s`` is found by bisection; raises if the target exceeds what the family
    reaches with ``|s g| <= 0.9``.
    """
    g = smooth_random_field(spec, rng, modes)
    pole = rng.normal(size=3)
    pole /= np.linalg.norm(pole)
    s_max = 0.9 / np.max(np.linalg.norm(g, axis=-1))

    def make(s):
        v = pole + s * g
        return VectorField(spec, v / np.linalg.norm(v, axis=-1, keepdims=True))

    if discrete_energy(make(s_max)) < energy:
        raise ValueError(f"energy {energy} unreachable with {modes} modes on this grid")
    lo, hi = 0.0, s_max
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if discrete_energy(make(mid)) < energy:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    return make(lo)


def tangent_perturbation(spec: GridSpec, surface: Hypersurface, base_point: np.ndarray,
                         psi: np.ndarray, scale: float = 1.0) -> VectorField:
    """``closest_point(p0 + scale * (psi1 e1 + psi2 e2))`` with a tangent frame at ``p0``.

    ``psi`` has shape ``(nx, ny, 2)``.
    """
    p0 = surface.closest_point(np.asarray(base_point, dtype=float))
    nu = surface.normal(p0)
    trial = np.array([1.0, 0.0, 0.0]) if abs(nu[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = trial - (trial @ nu) * nu
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(nu, e1)
    x = p0 + scale * (psi[..., :1] * e1 + psi[..., 1:] * e2)
    return VectorField(spec, surface.closest_point(x))


def equivariant_bubble(spec: GridSpec, center: Sequence[float], scale: float,
                       cutoff: float | None = None) -> VectorField:
    """Degree-one equivariant map ``theta(r) = 2 arctan(scale / r)`` into the sphere.

    The image covers the sphere once near ``center``.  Beyond ``cutoff`` the
    polar angle is blended smoothly to 0, so the far field is the north pole.
    """
    dx, dy = spec.displacement(center)
    r = np.hypot(dx, dy)
    theta = 2.0 * np.arctan2(scale, r)
    if cutoff is not None:
        s = np.clip((r - cutoff) / cutoff, 0.0, 1.0)
        theta = theta * (1.0 - s**3 * (10 - 15 * s + 6 * s**2))
    phi = np.arctan2(dy, dx)
    sin_t = np.sin(theta)
    v = np.stack([sin_t * np.cos(phi), sin_t * np.sin(phi), np.cos(theta)], axis=-1)
    return VectorField(spec, UnitSphere().closest_point(v))


def rotation_wave(spec: GridSpec, k: int = 1) -> VectorField:
    """``(cos(2 pi k j1 / nx), sin(2 pi k j1 / nx), 0)``."""
    j1 = np.arange(spec.nx)[:, None] * np.ones(spec.ny)
    ang = 2 * np.pi * k * j1 / spec.nx
    return VectorField(spec, np.stack([np.cos(ang), np.sin(ang), np.zeros_like(ang)], axis=-1))
