"""Regularity diagnostics along lattice trajectories.

* local energy inequality with a smooth cutoff,
* second-difference norms and the running quantity ``sup_s s^(1/2) ||D^2 u(s)||``,
* energy concentration detection on snapped parabolic cylinders with a greedy
  disjoint (Vitali-type) selection.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dynamics import SolverConfig, State, _rhs_values, discrete_energy, energy_density
from .grid import GridSpec, _weighted_lp, apply_multi_index, multi_indices
from .interpolant import radial_cutoff

__all__ = [
    "AnalysisError",
    "local_energy_field",
    "LocalEnergyReport",
    "local_energy_inequality_check",
    "SecondDerivativeTrace",
    "second_derivative_trace",
    "ParabolicCylinder",
    "ConcentrationReport",
    "detect_concentration",
    "default_eps0",
]


class AnalysisError(ValueError):
    """Trajectory sampling or parameters do not support the requested diagnostic."""


def default_eps0() -> float:
    """``0.3 * 4 pi``: a fraction of the energy of a degree-one sphere bubble."""
    return 0.3 * 4 * math.pi


# ---------------------------------------------------------------------------
# local energies


def _disk_offsets(radius_nodes: float) -> np.ndarray:
    m = int(math.ceil(radius_nodes))
    a, b = np.meshgrid(np.arange(-m, m + 1), np.arange(-m, m + 1), indexing="ij")
    return np.hypot(a, b) < radius_nodes


def local_energy_field(values: np.ndarray, spec: GridSpec, R: float,
                       density: np.ndarray | None = None) -> np.ndarray:
    """``E^h[u; B_R(jh)]`` for every node ``j`` (nodes strictly inside the ball).

    Periodic grids wrap; far-field grids count only real nodes.
    """
    if density is None:
        density = energy_density(values, spec)
    disk = _disk_offsets(R / spec.h).astype(float)
    m = disk.shape[0] // 2
    nx, ny = spec.shape
    if spec.periodic:
        if disk.shape[0] > min(nx, ny):
            # ball wraps onto itself: count each node once
            x0 = np.zeros(2)
            out = np.empty(spec.shape)
            for j1 in range(nx):
                for j2 in range(ny):
                    x0[:] = (j1 * spec.h, j2 * spec.h)
                    out[j1, j2] = np.sum(density[spec.distance(x0) < R])
            return spec.h**2 * out
        kernel = np.zeros(spec.shape)
        a, b = np.nonzero(disk)
        kernel[(a - m) % nx, (b - m) % ny] = 1.0
        out = np.fft.irfft2(np.fft.rfft2(density) * np.conj(np.fft.rfft2(kernel)), s=spec.shape)
    else:
        px, py = nx + 2 * m, ny + 2 * m
        big = np.zeros((px, py))
        big[:nx, :ny] = density
        ker = np.zeros((px, py))
        a, b = np.nonzero(disk)
        ker[(a - m) % px, (b - m) % py] = 1.0
        out = np.fft.irfft2(np.fft.rfft2(big) * np.conj(np.fft.rfft2(ker)), s=(px, py))[:nx, :ny]
    # FFT rounding can leave tiny negatives where the density vanishes
    return spec.h**2 * np.maximum(out, 0.0)


@dataclass
class LocalEnergyReport:
    """Both sides of the local energy inequality at each sampled time.

    ``lhs = E[u(t); B_R] + int_{t0}^{t} ||du/dt zeta||^2`` and
    ``rhs = E[u(t0); B_2R] + C (t - t0) / R^2 * E[f]``.
    """

    times: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    C: float
    k1: float
    required_C: float

    @property
    def slack(self) -> np.ndarray:
        return self.rhs - self.lhs

    @property
    def holds(self) -> bool:
        return bool(np.all(self.slack >= -1e-12 * (1 + np.abs(self.rhs))))


def _ball_energy(density, spec, center, R):
    return float(spec.h**2 * np.sum(density[spec.distance(center) < R]))


def local_energy_inequality_check(trajectory: Sequence[State], config: SolverConfig,
                                  R: float, x0: Sequence[float], t0: float, t1: float,
                                  energy_f: float | None = None,
                                  C: float | None = None) -> LocalEnergyReport:
    """Evaluate the local energy inequality on ``[t0, t1]`` for the ball ``B_R(x0)``.

    The time integral uses the trapezoid rule on the stored states with
    ``du/dt`` from the right-hand side.  ``C`` defaults to ``4 k1^2`` with
    ``k1 = max|D^+ zeta| R`` of the quintic cutoff.  ``required_C`` is the
    smallest constant for which the inequality holds at every sample.
    """
    states = [s for s in trajectory if t0 - 1e-12 <= s.t <= t1 + 1e-12]
    if len(states) < 3:
        raise AnalysisError(f"need at least 3 stored states in [{t0}, {t1}], got {len(states)}")
    spec = states[0].u.spec
    if energy_f is None:
        energy_f = discrete_energy(trajectory[0].u)
    zeta = radial_cutoff(spec, x0, R)
    if C is None:
        C = 4.0 * zeta.k1**2
    z2 = zeta.zeta.values ** 2
    times = np.array([s.t for s in states])
    dens0 = energy_density(states[0].u.values, spec)
    base = _ball_energy(dens0, spec, x0, 2 * R)
    rates = []
    ball = []
    for s in states:
        rhs = _rhs_values(s.u.values, spec, config, check=False)
        rates.append(spec.h**2 * np.sum(np.sum(rhs * rhs, axis=-1) * z2))
        ball.append(_ball_energy(energy_density(s.u.values, spec), spec, x0, R))
    rates = np.array(rates)
    integral = np.concatenate([[0.0], np.cumsum(0.5 * (rates[1:] + rates[:-1]) * np.diff(times))])
    lhs = np.array(ball) + integral
    growth = (times - times[0]) / R**2 * energy_f
    rhs = base + C * growth
    excess = lhs - base
    with np.errstate(divide="ignore", invalid="ignore"):
        need = np.where(growth > 0, excess / growth, np.where(excess > 0, np.inf, 0.0))
    return LocalEnergyReport(times, lhs, rhs, float(C), zeta.k1, float(max(0.0, need.max())))


# ---------------------------------------------------------------------------
# second differences


@dataclass
class SecondDerivativeTrace:
    times: np.ndarray
    d2: np.ndarray
    y: np.ndarray

    @property
    def sup_y(self) -> float:
        return float(self.y.max()) if len(self.y) else 0.0


def second_derivative_trace(trajectory: Sequence[State],
                            ball: tuple[Sequence[float], float] | None = None,
                            t_origin: float | None = None) -> SecondDerivativeTrace:
    """``||D^2 u(t)||_{L^2_h(ball)}`` (sum over all second-order multi-indices) and
    ``y(t) = sup_{s <= t} (s - t_origin)^{1/2} ||D^2 u(s)||``.
    """
    if not trajectory:
        return SecondDerivativeTrace(np.zeros(0), np.zeros(0), np.zeros(0))
    spec = trajectory[0].u.spec
    t_origin = trajectory[0].t if t_origin is None else t_origin
    mask = None if ball is None else spec.distance(ball[0]) < ball[1]
    alphas = list(multi_indices(2))
    times, d2 = [], []
    for s in trajectory:
        total = 0.0
        for alpha in alphas:
            v = apply_multi_index(s.u.values, spec, alpha)
            if mask is not None:
                v = v[mask]
            total += _weighted_lp(v, spec.h, 2)
        times.append(s.t)
        d2.append(total)
    times = np.array(times)
    d2 = np.array(d2)
    y = np.maximum.accumulate(np.sqrt(np.maximum(times - t_origin, 0.0)) * d2)
    return SecondDerivativeTrace(times, d2, y)


# ---------------------------------------------------------------------------
# concentration


@dataclass(frozen=True)
class ParabolicCylinder:
    """Cylinder ``B_R(x0) x [t0 - delta R^2 / 2, t0 + delta R^2 / 2]``.

    ``local_energy`` is ``E^h[u(T_j); B_{2R}(x0)]`` at the base time ``T_j``
    of the slice ``j`` containing ``t0``.
    """

    x0: float
    y0: float
    t0: float
    R: float
    local_energy: float
    slice_index: int
    base_time: float
    node: tuple[int, int]
    selected: bool = False


@dataclass
class ConcentrationReport:
    eps0: float
    delta: float
    R0: float
    energy_f: float
    cylinders: list = field(default_factory=list)
    h_values: tuple = ()

    @property
    def selected(self) -> list:
        return [c for c in self.cylinders if c.selected]

    @property
    def sum_R2(self) -> float:
        return float(sum(c.R**2 for c in self.selected))

    @property
    def ledger_bound(self) -> float:
        """``E[f] / (2 delta eps0)``."""
        return self.energy_f / (2 * self.delta * self.eps0)

    @property
    def ledger_constant(self) -> float:
        """``sum R_k^2`` divided by the ledger bound."""
        return self.sum_R2 / self.ledger_bound

    def per_slice_counts(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for c in self.selected:
            counts[c.slice_index] = counts.get(c.slice_index, 0) + 1
        return counts

    @property
    def max_slice_count(self) -> int:
        return max(self.per_slice_counts().values(), default=0)

    @property
    def stated_slice_bound(self) -> float:
        """``E[f] / (2 eps0)``."""
        return self.energy_f / (2 * self.eps0)

    @property
    def packing_slice_bound(self) -> float:
        """``E[f] / (eps0 / 2)``: disjoint balls each carrying more than ``eps0 / 2``."""
        return self.energy_f / (self.eps0 / 2)

    def selected_disjoint(self, spec: GridSpec | None = None) -> bool:
        by_slice: dict[int, list] = {}
        for c in self.selected:
            by_slice.setdefault(c.slice_index, []).append(c)
        for group in by_slice.values():
            for i, a in enumerate(group):
                for b in group[i + 1:]:
                    if _distance(a, b, spec) < 2 * a.R + 2 * b.R:
                        return False
        return True

    def summary(self) -> dict:
        return {
            "eps0": self.eps0, "delta": self.delta, "R0": self.R0, "energy_f": self.energy_f,
            "flagged": len(self.cylinders), "selected": len(self.selected),
            "sum_R2": self.sum_R2, "ledger_bound": self.ledger_bound,
            "ledger_constant": self.ledger_constant, "max_slice_count": self.max_slice_count,
            "stated_slice_bound": self.stated_slice_bound,
            "packing_slice_bound": self.packing_slice_bound,
            "h_values": list(self.h_values),
            "note": "liminf over h approximated by the finest h or the minimum over an h ladder",
        }

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["x0", "y0", "t0", "R", "local_energy", "selected"])
            for c in self.cylinders:
                writer.writerow([repr(c.x0), repr(c.y0), repr(c.t0), repr(c.R),
                                 repr(c.local_energy), int(c.selected)])
            fh.write("# " + json.dumps(self.summary(), sort_keys=True) + "\n")


def _distance(a: ParabolicCylinder, b: ParabolicCylinder, spec: GridSpec | None) -> float:
    dx, dy = a.x0 - b.x0, a.y0 - b.y0
    if spec is not None and spec.periodic:
        lx, ly = spec.extent
        dx -= lx * round(dx / lx)
        dy -= ly * round(dy / ly)
    return math.hypot(dx, dy)


def _select_disjoint(cands: list[ParabolicCylinder], spec: GridSpec) -> list[ParabolicCylinder]:
    """Greedy selection: radius descending, local energy descending, then node order."""
    order = sorted(cands, key=lambda c: (-c.R, -c.local_energy, c.node))
    chosen: list[ParabolicCylinder] = []
    for c in order:
        if all(_distance(c, s, spec) >= 2 * c.R + 2 * s.R for s in chosen):
            chosen.append(c)
    keep = {id(c) for c in chosen}
    return [ParabolicCylinder(**{**c.__dict__, "selected": id(c) in keep}) for c in cands]


def detect_concentration(trajectory: Sequence[State] | Sequence[Sequence[State]], eps0: float,
                         R0: float, delta: float | None = None,
                         energy_f: float | None = None) -> ConcentrationReport:
    """Flag snapped parabolic cylinders carrying energy above ``eps0 / 2``.

    ``[t_start, t_end]`` is split into slices of length ``delta R0^2 / 2`` with
    base times ``T_j``.  Each stored time ``t_k`` in slice ``j`` gets the radius
    ``R_k`` with ``t_k - delta R_k^2 / 2 = T_j``; the node ``x`` is flagged when
    ``E[u(T_j); B_{2 R_k}(x)] > eps0 / 2``.  Flagged balls of each slice are
    then thinned to a pairwise disjoint family.

    Passing a list of trajectories on nested grids (spacing halving, identical
    storage times) evaluates every local energy as the minimum over the ladder,
    on the coarsest grid's nodes.
    """
    if eps0 <= 0:
        raise AnalysisError("eps0 must be positive")
    ladder = list(trajectory) if trajectory and isinstance(trajectory[0], (list, tuple)) else [trajectory]
    ladder.sort(key=lambda tr: -tr[0].u.spec.h)
    coarse = ladder[0]
    spec = coarse[0].u.spec
    times = np.array([s.t for s in coarse])
    for tr in ladder[1:]:
        if len(tr) != len(coarse) or np.max(np.abs(np.array([s.t for s in tr]) - times)) > 1e-9:
            raise AnalysisError("ladder trajectories must share storage times")
        stride = spec.h / tr[0].u.spec.h
        if abs(stride - round(stride)) > 1e-9:
            raise AnalysisError("ladder spacings must divide the coarsest spacing")
    if energy_f is None:
        energy_f = discrete_energy(ladder[-1][0].u)
    if delta is None:
        delta = eps0 / (2 * energy_f) if energy_f > 0 else 1.0
    tau = delta * R0**2 / 2
    gaps = np.diff(times)
    if len(times) < 2 or gaps.max() > tau / 2 * (1 + 1e-9):
        raise AnalysisError(
            f"storage cadence {gaps.max() if len(gaps) else float('inf'):.3e} is coarser than "
            f"delta R0^2 / 4 = {tau / 2:.3e}"
        )
    t_start = times[0]
    report = ConcentrationReport(eps0, delta, R0, energy_f,
                                 h_values=tuple(tr[0].u.spec.h for tr in ladder))
    cache: dict[tuple[int, float], np.ndarray] = {}

    def ball_energy(j_base: int, idx_base: int, radius: float) -> np.ndarray:
        key = (idx_base, radius)
        if key not in cache:
            fields = []
            for tr in ladder:
                st = tr[idx_base].u
                e = local_energy_field(st.values, st.spec, radius)
                stride = int(round(spec.h / st.spec.h))
                fields.append(e[::stride, ::stride])
            cache[key] = np.min(fields, axis=0)
        return cache[key]

    by_slice: dict[int, list[ParabolicCylinder]] = {}
    for k in range(1, len(times)):
        t_k = times[k]
        # half-open slices; a time on a slice boundary belongs to the earlier slice
        j = int(math.ceil((t_k - t_start) / tau - 1e-9)) - 1
        T_j = t_start + j * tau
        idx = int(np.argmin(np.abs(times - T_j)))
        if times[idx] >= t_k:
            continue
        R_k = min(math.sqrt(2 * (t_k - times[idx]) / delta), R0)
        if R_k <= spec.h:
            continue
        e = ball_energy(j, idx, 2 * R_k)
        hits = np.argwhere(e > eps0 / 2)
        for j1, j2 in hits:
            by_slice.setdefault(j, []).append(ParabolicCylinder(
                float(j1 * spec.h), float(j2 * spec.h), float(t_k), float(R_k),
                float(e[j1, j2]), j, float(times[idx]), (int(j1), int(j2))))
    for j in sorted(by_slice):
        report.cylinders.extend(_select_disjoint(by_slice[j], spec))
    return report
