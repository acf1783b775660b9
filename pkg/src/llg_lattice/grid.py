"""Uniform 2-D grids and the difference calculus on them.

Fields are stored as arrays indexed ``values[j1, j2]`` (``j1`` along axis 1,
``j2`` along axis 2) with an optional trailing component axis of length 3.
Neighbour lookup at the grid edge is fixed by the grid's boundary rule:
periodic wrap, or ghost nodes clamped to a constant far-field value.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

__all__ = [
    "Boundary",
    "GridSpec",
    "Field",
    "VectorField",
    "ScalarField",
    "MultiIndex",
    "shifted",
    "difference",
    "laplacian",
    "diff",
    "laplacian_h",
    "lp_norm",
    "inner_l2h",
    "multi_indices",
    "apply_multi_index",
    "sobolev_norm",
    "gradient_norm",
    "GridMismatchError",
]


class GridMismatchError(ValueError):
    """Raised when two fields live on incompatible grids."""


class Boundary(enum.IntEnum):
    PERIODIC = 0
    CONSTANT_FAR_FIELD = 1


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid with spacing ``h`` and ``nx * ny`` nodes.

    ``far_field`` is the value of the ghost nodes of vector fields under
    :attr:`Boundary.CONSTANT_FAR_FIELD`; scalar and complex fields use
    ``far_field_scalar``.
    """

    h: float
    nx: int
    ny: int
    boundary: Boundary = Boundary.PERIODIC
    far_field: tuple[float, float, float] = (0.0, 0.0, 1.0)
    far_field_scalar: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.h) or self.h <= 0:
            raise ValueError(f"h: grid spacing must be positive, got {self.h!r}")
        if int(self.nx) != self.nx or int(self.ny) != self.ny:
            raise ValueError("nx, ny: node counts must be integers")
        if self.nx < 4 or self.ny < 4:
            raise ValueError(f"nx, ny: need at least 4 nodes per axis, got {self.nx}x{self.ny}")
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        object.__setattr__(self, "far_field", tuple(float(c) for c in self.far_field))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def periodic(self) -> bool:
        return self.boundary is Boundary.PERIODIC

    @property
    def extent(self) -> tuple[float, float]:
        return (self.nx * self.h, self.ny * self.h)

    def coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        """Node coordinates ``(x, y)`` as two ``(nx, ny)`` arrays."""
        x = np.arange(self.nx) * self.h
        y = np.arange(self.ny) * self.h
        return np.meshgrid(x, y, indexing="ij")

    def displacement(self, x0: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
        """Components of ``x_j - x0`` for all nodes, minimum image if periodic."""
        x, y = self.coordinates()
        dx = x - x0[0]
        dy = y - x0[1]
        if self.periodic:
            lx, ly = self.extent
            dx = dx - lx * np.round(dx / lx)
            dy = dy - ly * np.round(dy / ly)
        return dx, dy

    def distance(self, x0: Sequence[float]) -> np.ndarray:
        dx, dy = self.displacement(x0)
        return np.hypot(dx, dy)

    def ghost_value(self, values: np.ndarray):
        if values.ndim == 3 and values.shape[-1] == 3:
            return np.asarray(self.far_field, dtype=float)
        return self.far_field_scalar


@dataclass(frozen=True, eq=False)
class Field:
    """Immutable grid function: a :class:`GridSpec` and its node values."""

    spec: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.array(self.values, copy=True)
        if values.shape[:2] != self.spec.shape:
            raise GridMismatchError(
                f"values of shape {values.shape} do not match grid {self.spec.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def with_values(self, values: np.ndarray) -> "Field":
        return type(self)(self.spec, values)

    def __add__(self, other: "Field") -> "Field":
        _check_same_grid(self, other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        _check_same_grid(self, other)
        return self.with_values(self.values - other.values)

    def __mul__(self, c: float) -> "Field":
        return self.with_values(self.values * c)

    __rmul__ = __mul__

    def norm(self) -> np.ndarray:
        """Pointwise Euclidean magnitude."""
        return _pointwise_abs(self.values)


class VectorField(Field):
    """R^3-valued grid function, ``values.shape == (nx, ny, 3)``."""

    def __post_init__(self):
        super().__post_init__()
        if self.values.shape != (*self.spec.shape, 3):
            raise GridMismatchError(f"vector field needs shape (nx, ny, 3), got {self.values.shape}")


class ScalarField(Field):
    """Real (or complex) grid function, ``values.shape == (nx, ny)``."""

    def __post_init__(self):
        super().__post_init__()
        if self.values.shape != self.spec.shape:
            raise GridMismatchError(f"scalar field needs shape (nx, ny), got {self.values.shape}")


def _check_same_grid(u: Field, v: Field):
    if u.spec != v.spec or u.values.shape != v.values.shape:
        raise GridMismatchError("fields live on incompatible grids")


def _pointwise_abs(values: np.ndarray) -> np.ndarray:
    if values.ndim == 3:
        return np.sqrt(np.sum(np.abs(values) ** 2, axis=-1))
    return np.abs(values)


# ---------------------------------------------------------------------------
# array-level stencils


def shifted(values: np.ndarray, spec: GridSpec, axis: int, step: int) -> np.ndarray:
    """Return ``v`` with ``v[j] = values[j + step * e_axis]`` (axis in {1, 2})."""
    ax = axis - 1
    if spec.periodic:
        return np.roll(values, -step, axis=ax)
    out = np.empty_like(values)
    n = values.shape[ax]
    ghost = spec.ghost_value(values)
    src = [slice(None)] * values.ndim
    dst = [slice(None)] * values.ndim
    pad = [slice(None)] * values.ndim
    if step >= 0:
        src[ax], dst[ax], pad[ax] = slice(step, n), slice(0, n - step), slice(n - step, n)
    else:
        src[ax], dst[ax], pad[ax] = slice(0, n + step), slice(-step, n), slice(0, -step)
    out[tuple(dst)] = values[tuple(src)]
    out[tuple(pad)] = ghost
    return out


def difference(values: np.ndarray, spec: GridSpec, axis: int, kind: str) -> np.ndarray:
    h = spec.h
    if kind == "forward":
        return (shifted(values, spec, axis, 1) - values) / h
    if kind == "backward":
        return (values - shifted(values, spec, axis, -1)) / h
    if kind == "centered":
        return (shifted(values, spec, axis, 1) - shifted(values, spec, axis, -1)) / (2 * h)
    raise ValueError(f"unknown difference kind {kind!r}")


def laplacian(values: np.ndarray, spec: GridSpec) -> np.ndarray:
    out = -4.0 * values
    for axis in (1, 2):
        out = out + shifted(values, spec, axis, 1) + shifted(values, spec, axis, -1)
    return out / spec.h**2


# ---------------------------------------------------------------------------
# field-level operations


def diff(u: Field, axis: int, kind: str = "forward") -> Field:
    """Forward, backward or centered difference along axis 1 or 2."""
    if axis not in (1, 2):
        raise ValueError(f"axis must be 1 or 2, got {axis}")
    return u.with_values(difference(u.values, u.spec, axis, kind))


def laplacian_h(u: Field) -> Field:
    """Five-point discrete Laplacian."""
    return u.with_values(laplacian(u.values, u.spec))


def _weighted_lp(values: np.ndarray, h: float, p: float) -> float:
    mag = _pointwise_abs(values)
    if np.isinf(p):
        return float(mag.max()) if mag.size else 0.0
    if p < 1:
        raise ValueError(f"p must be >= 1 or inf, got {p}")
    return float((h**2 * np.sum(mag**p)) ** (1.0 / p))


def lp_norm(u: Field, p: float = 2.0) -> float:
    """``(h^2 sum_j |u_j|^p)^(1/p)``; node-wise max for ``p = inf`` (no h weight)."""
    return _weighted_lp(u.values, u.spec.h, p)


def inner_l2h(u: Field, v: Field) -> float:
    """Weighted inner product ``h^2 sum_j u_j . v_j``."""
    _check_same_grid(u, v)
    return float(u.spec.h**2 * np.sum(u.values * v.values))


@dataclass(frozen=True)
class MultiIndex:
    """Counts of forward/backward differences per axis."""

    plus1: int = 0
    minus1: int = 0
    plus2: int = 0
    minus2: int = 0

    def __post_init__(self):
        if min(self.plus1, self.minus1, self.plus2, self.minus2) < 0:
            raise ValueError("multi-index entries must be nonnegative")

    @property
    def order(self) -> int:
        return self.plus1 + self.minus1 + self.plus2 + self.minus2


def multi_indices(k: int) -> Iterator[MultiIndex]:
    """All multi-indices of order exactly ``k``."""
    for counts in itertools.product(range(k + 1), repeat=4):
        if sum(counts) == k:
            yield MultiIndex(*counts)


def apply_multi_index(values: np.ndarray, spec: GridSpec, alpha: MultiIndex) -> np.ndarray:
    out = values
    for axis, kind, count in (
        (1, "forward", alpha.plus1),
        (1, "backward", alpha.minus1),
        (2, "forward", alpha.plus2),
        (2, "backward", alpha.minus2),
    ):
        for _ in range(count):
            out = difference(out, spec, axis, kind)
    return out


def sobolev_norm(u: Field, k: int, p: float = 2.0, homogeneous: bool = False) -> float:
    """Discrete ``W^{k,p}`` norm: sum of ``L^p_h`` norms of ``D^alpha u``.

    The homogeneous variant keeps only ``|alpha| = k``.
    """
    if k not in (0, 1, 2):
        raise ValueError(f"Sobolev order k={k} unsupported; only k <= 2")
    orders = [k] if homogeneous else range(k + 1)
    total = 0.0
    for order in orders:
        for alpha in multi_indices(order):
            total += _weighted_lp(apply_multi_index(u.values, u.spec, alpha), u.spec.h, p)
    return total


def gradient_norm(values: np.ndarray, spec: GridSpec, p: float = 2.0) -> float:
    """``L^p_h`` norm of the forward gradient ``|D^+ u| = (sum_i |D_{+i} u|^2)^(1/2)``."""
    sq = sum(_pointwise_abs(difference(values, spec, axis, "forward")) ** 2 for axis in (1, 2))
    return _weighted_lp(np.sqrt(sq), spec.h, p)
