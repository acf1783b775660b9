"""Bilinear interpolation of lattice functions and Sobolev-type censuses.

On the cell with lower-left node ``j`` the interpolant is

    p(x, y) = u_j + D_{+1}u_j xi + D_{+2}u_j eta + D_{+1}D_{+2}u_j xi eta,

with local coordinates ``xi = x - j1 h`` and ``eta = y - j2 h`` in ``[0, h]``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .grid import Field, GridSpec, ScalarField, difference, gradient_norm, laplacian, _weighted_lp

__all__ = [
    "BilinearInterpolant",
    "build_interpolant",
    "edge_mismatch",
    "interpolant_norms",
    "CutoffFunction",
    "radial_cutoff",
    "smoothstep",
    "SobolevReport",
    "localized_sobolev_check",
    "CensusRow",
    "write_census",
    "norm_ratio_census",
    "sobolev_census",
    "translation_modulus",
]


def _components(values: np.ndarray) -> np.ndarray:
    """View values as ``(nx, ny, m)``."""
    return values if values.ndim == 3 else values[..., None]


@dataclass(frozen=True, eq=False)
class BilinearInterpolant:
    """Per-cell coefficients ``(a0, a1, a2, a3)``, each of shape ``(nx, ny, m)``."""

    spec: GridSpec
    coeffs: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]
    scalar: bool = False

    def evaluate(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Evaluate at points inside ``[0, nx h) x [0, ny h)`` (wrapped if periodic)."""
        spec = self.spec
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if spec.periodic:
            lx, ly = spec.extent
            x = np.mod(x, lx)
            y = np.mod(y, ly)
        i1 = np.clip(np.floor(x / spec.h).astype(int), 0, spec.nx - 1)
        i2 = np.clip(np.floor(y / spec.h).astype(int), 0, spec.ny - 1)
        return self.evaluate_cell(i1, i2, x - i1 * spec.h, y - i2 * spec.h)

    def evaluate_cell(self, i1, i2, xi, eta) -> np.ndarray:
        """Evaluate the polynomial of cell ``(i1, i2)`` at local coordinates."""
        a0, a1, a2, a3 = (c[i1, i2] for c in self.coeffs)
        xi = np.asarray(xi)[..., None]
        eta = np.asarray(eta)[..., None]
        out = a0 + a1 * xi + a2 * eta + a3 * xi * eta
        return out[..., 0] if self.scalar else out


def build_interpolant(u: Field) -> BilinearInterpolant:
    spec = u.spec
    vals = u.values
    d1 = difference(vals, spec, 1, "forward")
    d2 = difference(vals, spec, 2, "forward")
    d12 = difference(d1, spec, 2, "forward")
    scalar = vals.ndim == 2
    coeffs = tuple(_components(np.asarray(c, dtype=float)) for c in (vals, d1, d2, d12))
    return BilinearInterpolant(spec, coeffs, scalar)


def _moment(a: int, b: int, h: float) -> float:
    return h ** (a + 1) / (a + 1) * h ** (b + 1) / (b + 1)


_EXPONENTS = ((0, 0), (1, 0), (0, 1), (1, 1))


def _l2_squared(p: BilinearInterpolant) -> float:
    h = p.spec.h
    gram = np.array([[_moment(a1 + a2, b1 + b2, h) for a2, b2 in _EXPONENTS]
                     for a1, b1 in _EXPONENTS])
    c = np.stack(p.coeffs, axis=-1)  # (nx, ny, m, 4)
    return float(np.einsum("abmi,ij,abmj->", c, gram, c))


def _grad_l2_squared(p: BilinearInterpolant) -> float:
    h = p.spec.h
    _, a1, a2, a3 = p.coeffs
    # int (a1 + a3 eta)^2 + (a2 + a3 xi)^2 over [0, h]^2
    part = lambda a: h * (a * a * h + a * a3 * h**2 + a3 * a3 * h**3 / 3)
    return float(np.sum(part(a1) + part(a2)))


_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(4)


def _l4_fourth(p: BilinearInterpolant) -> float:
    h = p.spec.h
    nodes = 0.5 * h * (_GAUSS_X + 1)
    weights = 0.5 * h * _GAUSS_W
    a0, a1, a2, a3 = p.coeffs
    total = 0.0
    for xi, wx in zip(nodes, weights):
        for eta, wy in zip(nodes, weights):
            val = a0 + a1 * xi + a2 * eta + a3 * xi * eta
            total += wx * wy * np.sum(np.sum(val * val, axis=-1) ** 2)
    return float(total)


def interpolant_norms(p: BilinearInterpolant, which: str) -> float:
    """Exact ``L^2``, gradient ``L^2`` or ``L^4`` norm of ``p`` over all cells.

    ``which`` is one of ``"L2"``, ``"gradL2"``, ``"L4"``.
    """
    if which == "L2":
        return float(np.sqrt(_l2_squared(p)))
    if which == "gradL2":
        return float(np.sqrt(_grad_l2_squared(p)))
    if which == "L4":
        return float(_l4_fourth(p) ** 0.25)
    raise ValueError(f"unsupported interpolant norm {which!r}; use L2, gradL2 or L4")


def edge_mismatch(p: BilinearInterpolant, samples: int = 5) -> float:
    """Largest jump of ``p`` across interior cell edges at ``samples`` points per edge."""
    spec = p.spec
    s = np.linspace(0.0, spec.h, samples)
    i1, i2 = np.meshgrid(np.arange(spec.nx), np.arange(spec.ny), indexing="ij")
    worst = 0.0
    last1 = spec.nx if spec.periodic else spec.nx - 1
    last2 = spec.ny if spec.periodic else spec.ny - 1
    for t in s:
        # vertical edges: right side of cell (i1, i2) vs left side of (i1 + 1, i2)
        a = p.evaluate_cell(i1[:last1], i2[:last1], spec.h, t)
        b = p.evaluate_cell((i1[:last1] + 1) % spec.nx, i2[:last1], 0.0, t)
        worst = max(worst, float(np.max(np.abs(a - b))))
        a = p.evaluate_cell(i1[:, :last2], i2[:, :last2], t, spec.h)
        b = p.evaluate_cell(i1[:, :last2], (i2[:, :last2] + 1) % spec.ny, t, 0.0)
        worst = max(worst, float(np.max(np.abs(a - b))))
    return worst


# ---------------------------------------------------------------------------
# cutoffs


def smoothstep(s: np.ndarray) -> np.ndarray:
    """Quintic ``6 s^5 - 15 s^4 + 10 s^3`` clamped to ``[0, 1]``."""
    s = np.clip(s, 0.0, 1.0)
    return s**3 * (10 - 15 * s + 6 * s * s)


@dataclass(frozen=True, eq=False)
class CutoffFunction:
    """Radial cutoff: 1 on ``B_R(center)``, 0 outside ``B_{2R}``.

    ``k1 = max|D^+ zeta| R`` and ``k2 = max|Delta^h zeta| R^2`` are measured on
    the grid.
    """

    center: tuple[float, float]
    R: float
    zeta: ScalarField
    k1: float
    k2: float

    @property
    def support_mask(self) -> np.ndarray:
        return self.zeta.values > 0


def radial_cutoff(spec: GridSpec, center: Sequence[float], R: float) -> CutoffFunction:
    if not R > spec.h:
        raise ValueError(f"R: cutoff radius must exceed h = {spec.h}, got {R}")
    r = spec.distance(center)
    zeta = 1.0 - smoothstep((r - R) / R)
    grad = np.sqrt(sum(difference(zeta, spec, a, "forward") ** 2 for a in (1, 2)))
    k1 = float(grad.max() * R)
    k2 = float(np.abs(laplacian(zeta, spec)).max() * R**2)
    return CutoffFunction((float(center[0]), float(center[1])), float(R),
                          ScalarField(spec, zeta), k1, k2)


# ---------------------------------------------------------------------------
# localized Sobolev inequality


@dataclass(frozen=True)
class SobolevReport:
    s: float
    p: float
    q: float
    lhs: float
    rhs: float

    @property
    def ratio(self) -> float:
        if self.rhs == 0:
            return 0.0 if self.lhs == 0 else np.inf
        return self.lhs / self.rhs

    def exceeds(self, constant: float) -> bool:
        return self.ratio > constant


def localized_sobolev_check(u: Field, zeta: CutoffFunction, s: float, p: float,
                            q: float) -> SobolevReport:
    """Evaluate ``|| |u|^2 zeta ||_{2s}`` and ``||u||_{p, supp zeta} ||D^1(u zeta)||_q``.

    Requires ``(s + 1) / (2 s) = 1/p + 1/q``.  ``||D^1 v||_q`` is the norm of
    the forward gradient magnitude.
    """
    if abs((s + 1) / (2 * s) - (1 / p + 1 / q)) > 1e-12:
        raise ValueError(f"exponents violate (s+1)/(2s) = 1/p + 1/q: s={s}, p={p}, q={q}")
    spec = u.spec
    z = zeta.zeta.values
    vals = _components(u.values)
    sq = np.sum(vals * vals, axis=-1)
    lhs = _weighted_lp(sq * z, spec.h, 2 * s)
    local = np.where(zeta.support_mask[..., None], vals, 0.0)
    norm_p = _weighted_lp(local, spec.h, p)
    uz = vals * z[..., None]
    if spec.periodic:
        grad = gradient_norm(uz, spec, q)
    else:
        # u zeta vanishes at the ghost nodes
        grad = gradient_norm(uz, GridSpec(spec.h, spec.nx, spec.ny, spec.boundary,
                                          (0.0, 0.0, 0.0), 0.0), q)
    return SobolevReport(s, p, q, lhs, norm_p * grad)


# ---------------------------------------------------------------------------
# censuses


@dataclass(frozen=True)
class CensusRow:
    h: float
    lhs: float
    rhs: float

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs if self.rhs else 0.0


def write_census(rows: Iterable[CensusRow], path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["h", "lhs", "rhs", "ratio"])
        for r in rows:
            writer.writerow([repr(r.h), repr(r.lhs), repr(r.rhs), repr(r.ratio)])


def norm_ratio_census(h_values: Sequence[float], n_fields: int, rng: np.random.Generator,
                      which: str = "L2") -> list[CensusRow]:
    """Ratios ``||p_h|| / ||u||_h`` for white-noise scalar fields on the unit torus.

    ``which="L2"`` compares ``||p_h||_{L^2}`` with ``||u||_{L^2_h}``;
    ``which="gradL2"`` compares ``||grad p_h||_{L^2}`` with ``||D^+ u||_{L^2_h}``.
    """
    rows = []
    for h in h_values:
        n = int(round(1.0 / h))
        spec = GridSpec(1.0 / n, n, n)
        for _ in range(n_fields):
            u = ScalarField(spec, rng.normal(size=spec.shape))
            p = build_interpolant(u)
            if which == "L2":
                rows.append(CensusRow(spec.h, interpolant_norms(p, "L2"), _weighted_lp(u.values, spec.h, 2)))
            elif which == "gradL2":
                rows.append(CensusRow(spec.h, interpolant_norms(p, "gradL2"), gradient_norm(u.values, spec, 2)))
            else:
                raise ValueError(f"unsupported census norm {which!r}")
    return rows


def sobolev_census(functions: Sequence[Callable], cutoffs: Sequence[tuple[tuple[float, float], float]],
                   h: float, s: float, p: float, q: float) -> list[CensusRow]:
    """Localized Sobolev ratios for continuum functions sampled on the unit torus.

    ``functions[i]`` maps coordinate arrays ``(x, y)`` to values of shape
    ``(nx, ny, 3)``; ``cutoffs[i]`` is ``(center, R)``.
    """
    n = int(round(1.0 / h))
    spec = GridSpec(1.0 / n, n, n)
    x, y = spec.coordinates()
    rows = []
    for g, (center, R) in zip(functions, cutoffs):
        u = Field(spec, g(x, y))
        rep = localized_sobolev_check(u, radial_cutoff(spec, center, R), s, p, q)
        rows.append(CensusRow(spec.h, rep.lhs, rep.rhs))
    return rows


def translation_modulus(u: Field, shifts: Iterable[tuple[int, int]]) -> float:
    """``max ||grad p_h(. + delta) - grad p_h||_{L^2} / |delta|`` over grid shifts ``delta = k h``.

    On a periodic grid, translating ``p_h`` by a grid vector is the interpolant
    of the shifted samples, so the difference is itself a bilinear interpolant.
    """
    if not u.spec.periodic:
        raise ValueError("translation census needs a periodic grid")
    best = 0.0
    for k1, k2 in shifts:
        if k1 == 0 and k2 == 0:
            continue
        shifted = np.roll(u.values, (-k1, -k2), axis=(0, 1))
        diff = build_interpolant(u.with_values(shifted - u.values))
        best = max(best, interpolant_norms(diff, "gradL2") / (np.hypot(k1, k2) * u.spec.h))
    return best
