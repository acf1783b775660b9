"""Moving tangent frames along a lattice map and complex derivative coordinates.

A frame field assigns to every node an orthonormal tangent pair
``(e1, e2 = nu x e1)`` at ``u_j``.  Multiplication by ``i`` on the complex
coordinate ``v . e1 + i v . e2`` corresponds to ``v -> nu x v``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dynamics import State
from .grid import GridSpec, VectorField, difference, laplacian
from .target import Hypersurface

__all__ = [
    "FrameError",
    "FrameField",
    "transport_frame",
    "transport_along",
    "global_frame_field",
    "loop_holonomy",
    "rotation_angle",
    "ComplexDerivativeField",
    "tangent_coordinates",
    "decompose",
    "LinearizationResidual",
    "linearization_residual",
    "write_residual_census",
]


class FrameError(RuntimeError):
    """Transport hit a degenerate projection or the inputs are inconsistent."""


@dataclass(frozen=True, eq=False)
class FrameField:
    spec: GridSpec
    e1: np.ndarray
    e2: np.ndarray

    def invariant_errors(self, u: VectorField, surface: Hypersurface) -> dict[str, float]:
        """Largest deviations from unit length, tangency and ``e2 = nu x e1``."""
        nu = surface.normal(u.values, check=False)
        return {
            "unit": float(max(np.abs(np.linalg.norm(self.e1, axis=-1) - 1).max(),
                              np.abs(np.linalg.norm(self.e2, axis=-1) - 1).max())),
            "orthogonal": float(np.abs(np.sum(self.e1 * self.e2, axis=-1)).max()),
            "tangent": float(max(np.abs(np.sum(self.e1 * nu, axis=-1)).max(),
                                 np.abs(np.sum(self.e2 * nu, axis=-1)).max())),
            "complex": float(np.abs(self.e2 - np.cross(nu, self.e1)).max()),
        }


def _project_normalize(e: np.ndarray, nu: np.ndarray, where: str) -> np.ndarray:
    p = e - np.sum(e * nu, axis=-1, keepdims=True) * nu
    n = np.linalg.norm(p, axis=-1, keepdims=True)
    if np.any(n < 0.5):
        raise FrameError(f"degenerate frame projection ({float(n.min()):.3f} < 0.5) {where}")
    return p / n


def transport_along(points: np.ndarray, surface: Hypersurface, e: np.ndarray,
                    substeps: int = 1) -> np.ndarray:
    """Carry tangent vectors ``e`` (at ``points[0]``) along the polyline ``points``.

    ``points`` has shape ``(n, ..., 3)``; the result has shape ``(n, ..., 3)``.
    Each edge is split into ``substeps`` pieces whose endpoints are retracted
    onto the surface.
    """
    out = np.empty_like(points)
    out[0] = e
    for k in range(1, len(points)):
        a, b = points[k - 1], points[k]
        for m in range(1, substeps + 1):
            p = b if m == substeps else surface.closest_point(a + (b - a) * (m / substeps))
            e = _project_normalize(e, surface.normal(p, check=False), f"on step {k}")
        out[k] = e
    return out


def transport_frame(u: VectorField, surface: Hypersurface, seed: Sequence[float],
                    substeps: int = 1) -> FrameField:
    """Frame by discrete parallel transport from node ``(0, 0)``.

    The seed is propagated along row ``j2 = 0`` in increasing ``j1``, then up
    every column in increasing ``j2``.  Each edge update is
    ``e' = normalize(P_{T_{u'}N} e)``.
    """
    vals = u.values
    surface.check_on_surface(vals)
    nu = surface.normal(vals, check=False)
    seed = np.asarray(seed, dtype=float)
    e0 = _project_normalize(seed, nu[0, 0], "at the seed node")
    e1 = np.empty_like(vals)
    e1[:, 0] = transport_along(vals[:, 0], surface, e0, substeps)
    # columns are independent once row 0 is known
    col = transport_along(np.swapaxes(vals, 0, 1), surface, e1[:, 0], substeps)
    e1 = np.swapaxes(col, 0, 1).copy()
    e1 = _project_normalize(e1, nu, "in final cleanup")
    return FrameField(u.spec, e1, np.cross(nu, e1))


def global_frame_field(u: VectorField, surface: Hypersurface) -> FrameField:
    e1, e2 = surface.global_frame(u.values)
    return FrameField(u.spec, e1, e2)


def loop_holonomy(points: np.ndarray, surface: Hypersurface, seed: Sequence[float],
                  substeps: int = 1) -> float:
    """Signed rotation angle of a tangent vector transported once around a closed loop.

    ``points`` lists the loop's vertices without repeating the first one.  The
    angle is measured in the basis ``(e, nu x e)`` at the start.
    """
    closed = np.concatenate([points, points[:1]], axis=0)
    nu0 = surface.normal(points[0], check=False)
    e0 = _project_normalize(np.asarray(seed, dtype=float), nu0, "at the seed")
    e_end = transport_along(closed, surface, e0, substeps)[-1]
    return float(np.arctan2(e_end @ np.cross(nu0, e0), e_end @ e0))


def rotation_angle(a: FrameField, b: FrameField) -> np.ndarray:
    """Node-wise angle ``theta`` with ``a.e1 = cos(theta) b.e1 + sin(theta) b.e2``."""
    return np.arctan2(np.sum(a.e1 * b.e2, axis=-1), np.sum(a.e1 * b.e1, axis=-1))


# ---------------------------------------------------------------------------
# complex coordinates


def tangent_coordinates(v: np.ndarray, frames: FrameField) -> np.ndarray:
    """``v . e1 + i v . e2`` node-wise."""
    return np.sum(v * frames.e1, axis=-1) + 1j * np.sum(v * frames.e2, axis=-1)


@dataclass(frozen=True, eq=False)
class ComplexDerivativeField:
    """``q_plus[k-1]``, ``q_minus[k-1]`` complex and ``a_plus``, ``a_minus`` real, for k = 1, 2."""

    spec: GridSpec
    q_plus: np.ndarray
    q_minus: np.ndarray
    a_plus: np.ndarray
    a_minus: np.ndarray


def decompose(u: VectorField, frames: FrameField, surface: Hypersurface) -> ComplexDerivativeField:
    """Split ``D_{+-k} u_j`` into ``q e`` (tangent, complex) and ``a nu`` (normal)."""
    if frames.spec != u.spec:
        raise FrameError("frame field and map live on different grids")
    nu = surface.normal(u.values, check=False)
    qp, qm, ap, am = [], [], [], []
    for axis in (1, 2):
        for kind, q, a in (("forward", qp, ap), ("backward", qm, am)):
            d = difference(u.values, u.spec, axis, kind)
            q.append(tangent_coordinates(d, frames))
            a.append(np.sum(d * nu, axis=-1))
    return ComplexDerivativeField(u.spec, np.array(qp), np.array(qm), np.array(ap), np.array(am))


# ---------------------------------------------------------------------------
# linearized system


@dataclass(frozen=True, eq=False)
class LinearizationResidual:
    """``R = dq/dt - (1 + i) Delta^h q`` for ``q = q^{+k}``, k = 1, 2.

    ``residual`` has shape ``(2, n_t, nx, ny)`` for the interior time samples;
    ``reference`` holds the matching ``max_l |q_l|^3 + max_l |q_l||D^1 q_l|``
    over the nearest-neighbour stencil of each node, where ``|q|`` and
    ``|D^1 q|`` combine both directions.
    """

    spec: GridSpec
    dt: float
    residual: np.ndarray
    reference: np.ndarray
    q_max: float
    temporal_error: float

    @property
    def residual_l2(self) -> float:
        """Largest ``L^2_h`` norm of ``R`` over time samples and k."""
        per = np.sqrt(self.spec.h**2 * np.sum(np.abs(self.residual) ** 2, axis=(2, 3)))
        return float(per.max())

    @property
    def ratio_max(self) -> float:
        ref = self.reference
        mask = ref > 1e-8 * ref.max() if ref.max() > 0 else np.zeros_like(ref, dtype=bool)
        if not np.any(mask):
            return 0.0
        return float((np.abs(self.residual)[mask] / ref[mask]).max())


def _stencil_max(a: np.ndarray, spec: GridSpec) -> np.ndarray:
    out = a.copy()
    for axis in (1, 2):
        for step in (1, -1):
            out = np.maximum(out, np.roll(a, -step, axis=axis - 1) if spec.periodic
                             else _shift_clamped(a, axis - 1, step))
    return out


def _shift_clamped(a, ax, step):
    idx = np.clip(np.arange(a.shape[ax]) + step, 0, a.shape[ax] - 1)
    return np.take(a, idx, axis=ax)


def _q_gradient(q: np.ndarray, spec: GridSpec) -> np.ndarray:
    """Node-wise ``max`` over the four one-sided differences of ``|D q|``."""
    vals = [np.abs(difference(q, spec, axis, kind))
            for axis in (1, 2) for kind in ("forward", "backward")]
    return np.max(vals, axis=0)


def linearization_residual(states: Sequence[State], frames: Sequence[FrameField],
                           surface: Hypersurface, temporal_fraction: float = 0.1,
                           ) -> LinearizationResidual:
    """Residual of ``dq/dt = (1 + i) Delta^h q`` along an ``alpha = 1`` trajectory.

    ``dq/dt`` is the centered difference of consecutive snapshots, which must be
    uniformly spaced.  The temporal truncation error is estimated by comparing
    with the centered difference over ``2 dt``; when it exceeds
    ``temporal_fraction`` of the residual the mesh is rejected.
    """
    if len(states) != len(frames):
        raise FrameError("need one frame field per state")
    if len(states) < 5:
        raise FrameError("need at least 5 snapshots for the residual and its error estimate")
    t = np.array([s.t for s in states])
    dts = np.diff(t)
    if np.ptp(dts) > 1e-9 * dts.mean():
        raise FrameError("snapshots must be uniformly spaced in time")
    dt = float(dts.mean())
    spec = states[0].u.spec
    qs = np.array([decompose(s.u, f, surface).q_plus for s, f in zip(states, frames)])
    # qs: (n_t, 2, nx, ny)
    dq = (qs[2:] - qs[:-2]) / (2 * dt)
    dq_wide = (qs[4:] - qs[:-4]) / (4 * dt)
    temporal = np.abs(dq_wide - dq[1:-1]) / 3.0
    lap = np.array([[laplacian(q, spec) for q in qk] for qk in qs[1:-1]])
    resid = dq - (1 + 1j) * lap
    # |q| and |D^1 q| combine both directions k = 1, 2
    absq = np.sqrt(np.sum(np.abs(qs[1:-1]) ** 2, axis=1))
    grad = np.array([np.sqrt(sum(_q_gradient(q, spec) ** 2 for q in qk)) for qk in qs[1:-1]])
    ref1 = np.array([_stencil_max(a**3, spec) + _stencil_max(a * g, spec)
                     for a, g in zip(absq, grad)])
    ref = np.repeat(ref1[:, None], 2, axis=1)
    res_norm = float(np.sqrt(spec.h**2 * np.sum(np.abs(resid[1:-1]) ** 2, axis=(2, 3))).max())
    temp_norm = float(np.sqrt(spec.h**2 * np.sum(temporal**2, axis=(2, 3))).max())
    if res_norm > 0 and temp_norm > temporal_fraction * res_norm:
        raise FrameError(
            f"time mesh too coarse: centered-difference error {temp_norm:.3e} exceeds "
            f"{temporal_fraction:g} x residual {res_norm:.3e} at dt = {dt:.3e}"
        )
    return LinearizationResidual(spec, dt, np.moveaxis(resid, 0, 1), np.moveaxis(ref, 0, 1),
                                 float(np.abs(qs).max()), temp_norm)


def write_residual_census(rows: Sequence[LinearizationResidual], path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["h", "dt", "q_max", "residual_l2", "ratio_max"])
        for r in rows:
            writer.writerow([repr(r.spec.h), repr(r.dt), repr(r.q_max), repr(r.residual_l2),
                             repr(r.ratio_max)])
