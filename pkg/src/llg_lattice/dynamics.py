"""Semi-discrete LLG and harmonic map heat flow on the lattice.

The right-hand sides act node-wise on a :class:`~llg_lattice.grid.VectorField`
whose values lie on a target :class:`~llg_lattice.target.Hypersurface`.  Time
integration is classical RK4 followed by nearest-point retraction onto the
target after every full step.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .grid import GridSpec, ScalarField, VectorField, difference, laplacian
from .target import Hypersurface, ProjectionError

__all__ = [
    "SolverConfig",
    "State",
    "EnergyTrace",
    "IntegrationError",
    "energy_density",
    "discrete_energy",
    "lagrange_multiplier",
    "rhs_llg",
    "rhs_heatflow",
    "step",
    "evolve",
    "local_energy",
    "energy_rate",
    "energy_derivative",
    "dissipation_residual",
    "lambda_gradient_ratio",
]


class IntegrationError(RuntimeError):
    """A time step produced non-finite values or could not be retracted."""


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of a run.

    Parameters
    ----------
    alpha : float
        Damping constant, ``alpha >= 0``.
    surface : Hypersurface
        Target surface.
    t_end : float
        Final time.
    dt : float, optional
        Fixed step.  When omitted ``dt = cfl * h**2 / (1 + alpha)``.
    cfl : float
        CFL constant in ``(0, 1/4]``.
    projection : {"nearest_point", "none"}
    model : {"llg", "heatflow"}
    record_every : int
        Energy trace cadence in steps.
    """

    alpha: float
    surface: Hypersurface
    t_end: float = 1.0
    dt: float | None = None
    cfl: float = 0.125
    projection: str = "nearest_point"
    model: str = "llg"
    record_every: int = 1

    def __post_init__(self):
        if not (self.alpha >= 0 and np.isfinite(self.alpha)):
            raise ValueError(f"alpha: damping must be >= 0, got {self.alpha!r}")
        if not 0 < self.cfl <= 0.25:
            raise ValueError(f"cfl: constant must lie in (0, 1/4], got {self.cfl!r}")
        if self.dt is not None and not self.dt > 0:
            raise ValueError(f"dt: step must be positive, got {self.dt!r}")
        if not self.t_end >= 0:
            raise ValueError(f"t_end: must be nonnegative, got {self.t_end!r}")
        if self.projection not in ("nearest_point", "none"):
            raise ValueError(f"projection: unknown policy {self.projection!r}")
        if self.model not in ("llg", "heatflow"):
            raise ValueError(f"model: unknown model {self.model!r}")
        if int(self.record_every) < 1:
            raise ValueError("record_every: must be a positive integer")

    def time_step(self, spec: GridSpec) -> float:
        if self.dt is not None:
            return float(self.dt)
        return self.cfl * spec.h**2 / (1.0 + self.alpha)

    @property
    def dissipation_coefficient(self) -> float:
        """``c`` in ``dE/dt = -c ||du/dt||^2`` for this model."""
        if self.model == "heatflow":
            return 1.0
        return self.alpha / (1.0 + self.alpha**2)


@dataclass(frozen=True)
class State:
    t: float
    u: VectorField


@dataclass
class EnergyTrace:
    """Energy samples of a run: time, energy, ``||du/dt||^2`` and retraction drift."""

    t: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    dissipation: list = field(default_factory=list)
    max_offmanifold: list = field(default_factory=list)
    rate: list = field(default_factory=list)
    states: list = field(default_factory=list)

    def append(self, t, energy, dissipation, drift, rate=float("nan")):
        if self.t and not t > self.t[-1]:
            raise ValueError("energy trace timestamps must be strictly increasing")
        self.t.append(float(t))
        self.energy.append(float(energy))
        self.dissipation.append(float(dissipation))
        self.max_offmanifold.append(float(drift))
        self.rate.append(float(rate))

    def arrays(self):
        return (np.array(self.t), np.array(self.energy), np.array(self.dissipation),
                np.array(self.max_offmanifold))

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["t", "energy", "dissipation", "max_offmanifold"])
            for row in zip(self.t, self.energy, self.dissipation, self.max_offmanifold):
                writer.writerow([repr(v) for v in row])


# ---------------------------------------------------------------------------
# energy


def energy_density(values: np.ndarray, spec: GridSpec) -> np.ndarray:
    """Node-wise ``e_j = 1/4 sum_i (|D_{+i} u_j|^2 + |D_{-i} u_j|^2)``."""
    out = np.zeros(spec.shape)
    for axis in (1, 2):
        for kind in ("forward", "backward"):
            d = difference(values, spec, axis, kind)
            out += np.sum(d * d, axis=-1) if d.ndim == 3 else d * d
    return 0.25 * out


def discrete_energy(u: VectorField) -> float:
    """``E^h[u] = 1/2 h^2 sum_j 1/2 sum_i (|D_{+i} u_j|^2 + |D_{-i} u_j|^2)``."""
    return float(u.spec.h**2 * np.sum(energy_density(u.values, u.spec)))


def energy_derivative(u: VectorField, v: np.ndarray) -> float:
    """Directional derivative of ``E^h`` at ``u`` along ``v`` (exact; ``E^h`` is quadratic)."""
    spec = u.spec
    total = 0.0
    for axis in (1, 2):
        for kind in ("forward", "backward"):
            du = difference(u.values, spec, axis, kind)
            # ghost nodes are constant, so v has zero ghost values
            dv = difference(v, GridSpec(spec.h, spec.nx, spec.ny, spec.boundary, (0.0, 0.0, 0.0)),
                            axis, kind)
            total += np.sum(du * dv)
    return float(0.5 * spec.h**2 * total)


def local_energy(u: VectorField, center: Sequence[int], R: float) -> float:
    """Energy sum restricted to nodes ``j`` with ``|jh - x0| < R``, ``x0 = center * h``."""
    spec = u.spec
    if not R > spec.h:
        raise ValueError(f"R: radius must exceed h = {spec.h}, got {R}")
    x0 = (center[0] * spec.h, center[1] * spec.h)
    mask = spec.distance(x0) < R
    return float(spec.h**2 * np.sum(energy_density(u.values, spec)[mask]))


# ---------------------------------------------------------------------------
# right-hand sides


def _tension(values, spec, surface, check):
    """``(Delta u, nu, Delta u + lambda nu)`` with ``lambda = -Delta u . nu``."""
    lap = laplacian(values, spec)
    nu = surface.normal(values, check=check)
    lam = -np.sum(lap * nu, axis=-1)
    return lap, nu, lam, lap + lam[..., None] * nu


def lagrange_multiplier(u: VectorField, surface: Hypersurface) -> ScalarField:
    """``lambda_j = -Delta^h u_j . nu_j``."""
    _, _, lam, _ = _tension(u.values, u.spec, surface, check=True)
    return ScalarField(u.spec, lam)


def _rhs_values(values, spec, config: SolverConfig, check):
    lap, nu, lam, tangential = _tension(values, spec, config.surface, check)
    if config.model == "heatflow":
        return tangential
    return np.cross(nu, lap) + config.alpha * tangential


def rhs_llg(u: VectorField, config: SolverConfig) -> VectorField:
    """``nu_j x Delta^h u_j + alpha (Delta^h u_j + lambda_j nu_j)``."""
    lap, nu, _, tangential = _tension(u.values, u.spec, config.surface, check=True)
    return VectorField(u.spec, np.cross(nu, lap) + config.alpha * tangential)


def rhs_heatflow(u: VectorField, surface: Hypersurface) -> VectorField:
    """``Delta^h u_j + lambda_j nu_j``."""
    _, _, _, tangential = _tension(u.values, u.spec, surface, check=True)
    return VectorField(u.spec, tangential)


# ---------------------------------------------------------------------------
# time stepping


def _first_bad_node(mask: np.ndarray) -> tuple[int, int]:
    j1, j2 = np.argwhere(mask)[0]
    return int(j1), int(j2)


def _rk4(values, spec, config, dt):
    k1 = _rhs_values(values, spec, config, check=False)
    k2 = _rhs_values(values + 0.5 * dt * k1, spec, config, check=False)
    k3 = _rhs_values(values + 0.5 * dt * k2, spec, config, check=False)
    k4 = _rhs_values(values + dt * k3, spec, config, check=False)
    return values + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _advance(state: State, config: SolverConfig, dt: float) -> tuple[State, float]:
    spec = state.u.spec
    new = _rk4(state.u.values, spec, config, dt)
    finite = np.all(np.isfinite(new), axis=-1)
    if not np.all(finite):
        raise IntegrationError(
            f"non-finite value at node {_first_bad_node(~finite)} at t = {state.t + dt:.6g}"
        )
    surface = config.surface
    drift = np.abs(surface.implicit(new)) / np.linalg.norm(surface.implicit_gradient(new), axis=-1)
    if config.projection == "nearest_point":
        try:
            new = surface.closest_point(new)
        except ProjectionError as exc:
            raise IntegrationError(
                f"retraction failed near node {_first_bad_node(drift >= drift.max())} "
                f"at t = {state.t + dt:.6g}: {exc}"
            ) from exc
    return State(state.t + dt, VectorField(spec, new)), float(drift.max())


def step(state: State, config: SolverConfig) -> State:
    """One RK4 step of size ``config.time_step`` followed by retraction."""
    return _advance(state, config, config.time_step(state.u.spec))[0]


def evolve(initial: VectorField, config: SolverConfig, store_every: int = 0,
           t0: float = 0.0) -> tuple[State, EnergyTrace]:
    """Integrate from ``t0`` to ``t0 + config.t_end``.

    The step is shrunk so an integer number of steps lands on ``t_end``.  With
    ``store_every > 0`` every ``store_every``-th state (including the first)
    is kept in ``trace.states``.
    """
    config.surface.check_on_surface(initial.values)
    spec = initial.spec
    dt_max = config.time_step(spec)
    n_steps = max(1, math.ceil(config.t_end / dt_max - 1e-12)) if config.t_end > 0 else 0
    dt = config.t_end / n_steps if n_steps else 0.0
    state = State(t0, initial)
    trace = EnergyTrace()

    def record(s, drift):
        rhs = _rhs_values(s.u.values, spec, config, check=False)
        trace.append(s.t, discrete_energy(s.u), spec.h**2 * np.sum(rhs * rhs), drift,
                     energy_derivative(s.u, rhs))

    record(state, 0.0)
    if store_every:
        trace.states.append(state)
    for n in range(1, n_steps + 1):
        state, drift = _advance(state, config, dt)
        # reset accumulated rounding in t
        state = State(t0 + n * dt, state.u)
        if n % config.record_every == 0 or n == n_steps:
            record(state, drift)
        if store_every and n % store_every == 0:
            trace.states.append(state)
    return state, trace


# ---------------------------------------------------------------------------
# diagnostics


def energy_rate(t: np.ndarray, energy: np.ndarray) -> np.ndarray:
    """``dE/dt`` from a uniformly sampled trace.

    Fourth-order centered differences in the interior, fourth-order one-sided
    stencils at the first and last two samples.
    """
    t = np.asarray(t, dtype=float)
    e = np.asarray(energy, dtype=float)
    if len(e) < 5:
        raise ValueError("need at least 5 energy samples to estimate dE/dt")
    dt = np.diff(t)
    if np.ptp(dt) > 1e-9 * dt.mean():
        raise ValueError("energy samples must be uniformly spaced in time")
    tau = dt.mean()
    rate = np.empty_like(e)
    rate[2:-2] = (e[:-4] - 8 * e[1:-3] + 8 * e[3:-1] - e[4:]) / (12 * tau)
    fwd = np.array([-25, 48, -36, 16, -3]) / (12 * tau)
    rate[0] = fwd @ e[:5]
    rate[1] = np.array([-3, -10, 18, -6, 1]) / (12 * tau) @ e[:5]
    rate[-1] = -fwd @ e[::-1][:5]
    rate[-2] = -(np.array([-3, -10, 18, -6, 1]) / (12 * tau)) @ e[::-1][:5]
    return rate


def dissipation_residual(trace: EnergyTrace, coefficient: float,
                         method: str = "chain") -> np.ndarray:
    """``|dE/dt + coefficient * ||du/dt||^2|`` per trace sample.

    ``method="chain"`` takes ``dE/dt`` as the exact derivative of ``E^h`` along
    the right-hand side; ``method="trace"`` differentiates the recorded energy
    sequence in time (interior samples only).
    """
    t, energy, dissipation, _ = trace.arrays()
    if method == "chain":
        return np.abs(np.array(trace.rate) + coefficient * dissipation)
    if method == "trace":
        rate = energy_rate(t, energy)
        return np.abs(rate + coefficient * dissipation)[2:-2]
    raise ValueError(f"unknown method {method!r}")


def lambda_gradient_ratio(u: VectorField, surface: Hypersurface) -> float:
    """Largest node-wise ratio ``|D^1 lambda| / (|D^1 u|^3 + |D^1 u| |D^2 u|)``.

    ``D^1`` and ``D^2`` collect all forward differences of order 1 and 2.
    """
    spec = u.spec
    lam = lagrange_multiplier(u, surface).values
    dlam = np.sqrt(sum(difference(lam, spec, a, "forward") ** 2 for a in (1, 2)))
    d1 = [difference(u.values, spec, a, "forward") for a in (1, 2)]
    g1 = np.sqrt(sum(np.sum(d * d, axis=-1) for d in d1))
    g2 = np.sqrt(sum(np.sum(difference(d, spec, b, "forward") ** 2, axis=-1)
                     for d in d1 for b in (1, 2)))
    scale = g1**3 + g1 * g2
    mask = scale > 1e-14 * max(scale.max(), 1e-300)
    if not np.any(mask):
        return 0.0
    return float(np.max(dlam[mask] / scale[mask]))
