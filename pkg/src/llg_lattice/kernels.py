"""Discrete fundamental solutions of ``du/dt = c * Delta^h u`` on the lattice.

In one dimension the solution from ``delta / h`` is

    w_j(t) = (1/h) sum_{k >= max(0, j)} z^(k-j)/(k-j)! * z^k/k! * exp(-2z),  z = c t / h^2,

the law of a difference of two independent Poisson counts when ``c`` is real.
In ``d`` dimensions the kernel is the product of one-dimensional factors.
``c = 1`` gives the heat equation and ``c = alpha + i`` the damped
Schrödinger equation.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import special

from .grid import Field, GridSpec

__all__ = [
    "KernelError",
    "Kernel1D",
    "KernelD",
    "poisson_log_weights",
    "kernel_1d",
    "kernel_d",
    "apply_kernel",
    "duhamel_solve",
    "EstimateReport",
    "verify_lplq",
    "target_slope",
]

J_MAX = 1_000_000
TAIL_TOL = 1e-15
# 2(|z| - Re z) above this means the Poisson sum loses more than ~2 digits to cancellation
_CANCELLATION_LIMIT = 4.0


class KernelError(ValueError):
    """Invalid kernel request or non-convergent truncation."""


# ---------------------------------------------------------------------------
# log-space Poisson weights

# Stirling series remainder lgamma(n+1) - [(n+1/2) ln n - n + ln(2 pi)/2]
_STIRLING_COEFFS = (1 / 12, -1 / 360, 1 / 1260, -1 / 1680, 1 / 1188)


def _stirling_error(n: np.ndarray) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    out = np.empty_like(n)
    small = n < 16
    ns = n[small]
    with np.errstate(divide="ignore"):
        out[small] = (special.gammaln(ns + 1) - (ns + 0.5) * np.log(np.where(ns > 0, ns, 1.0))
                      + ns - 0.5 * math.log(2 * math.pi))
    nl = n[~small]
    inv2 = 1.0 / (nl * nl)
    acc = np.zeros_like(nl)
    for c in reversed(_STIRLING_COEFFS):
        acc = acc * inv2 + c
    out[~small] = acc / nl
    return out


def _deviance(m: np.ndarray, z: float) -> np.ndarray:
    """``m ln(m/z) + z - m`` without cancellation when ``m`` is close to ``z``."""
    m = np.asarray(m, dtype=float)
    out = np.empty_like(m)
    near = np.abs(m - z) < 0.1 * (m + z)
    mn = m[near]
    v = (mn - z) / (mn + z)
    # (m - z) v + 2 m sum_{k>=1} v^(2k+1)/(2k+1)
    v2 = v * v
    term = v * v2
    series = np.zeros_like(v)
    for k in range(1, 60):
        series += term / (2 * k + 1)
        term = term * v2
    out[near] = (mn - z) * v + 2 * mn * series
    mf = m[~near]
    with np.errstate(divide="ignore", invalid="ignore"):
        out[~near] = np.where(mf > 0, mf * np.log(mf / z) + z - mf, z)
    return out


def poisson_log_weights(m: np.ndarray, z: float) -> np.ndarray:
    """``log(z^m e^{-z} / m!)`` for integer ``m >= 0`` and real ``z > 0``.

    Saddle-point form ``-ln(2 pi m)/2 - stirling_error(m) - deviance(m, z)``
    keeps full relative precision for large ``m`` and ``z``.
    """
    m = np.asarray(m, dtype=float)
    out = np.empty_like(m)
    zero = m == 0
    out[zero] = -z
    mp = m[~zero]
    out[~zero] = (-0.5 * np.log(2 * math.pi * mp) - _stirling_error(mp) - _deviance(mp, z))
    return out


# ---------------------------------------------------------------------------
# kernels


@dataclass(frozen=True, eq=False)
class Kernel1D:
    """Kernel values ``w_j(t)`` for offsets ``j = -J..J``."""

    h: float
    t: float
    coeff: complex
    J: int
    values: np.ndarray

    @property
    def offsets(self) -> np.ndarray:
        return np.arange(-self.J, self.J + 1)

    def mass(self) -> complex:
        """``h * sum_j w_j``."""
        return self.h * np.sum(self.values)

    def norm(self, r: float, derivative: bool = False) -> float:
        """``L^r_h`` norm (weight ``h``) of ``w`` or of its forward difference."""
        v = self.values
        if derivative:
            v = np.diff(np.concatenate([[0.0], v, [0.0]])) / self.h
        a = np.abs(v)
        if np.isinf(r):
            return float(a.max())
        return float((self.h * np.sum(a**r)) ** (1.0 / r))


@dataclass(frozen=True, eq=False)
class KernelD:
    """Product kernel ``K_j = prod_i w_{j_i}``."""

    factors: tuple[Kernel1D, ...]

    def __post_init__(self):
        if len(self.factors) not in (1, 2):
            raise KernelError("kernel dimension must be 1 or 2")
        f0 = self.factors[0]
        for f in self.factors[1:]:
            if f.h != f0.h or f.t != f0.t or f.coeff != f0.coeff:
                raise KernelError("kernel factors must share h, t and coefficient")

    @property
    def d(self) -> int:
        return len(self.factors)

    @property
    def h(self) -> float:
        return self.factors[0].h

    @property
    def t(self) -> float:
        return self.factors[0].t

    def dense(self) -> np.ndarray:
        out = self.factors[0].values
        for f in self.factors[1:]:
            out = np.multiply.outer(out, f.values)
        return out

    def norm(self, r: float, derivative_order: int = 0) -> float:
        """``L^r_h`` norm of ``K``, or ``sum_i ||D_{+i} K||`` for ``derivative_order = 1``.

        Both factor over axes, so no dense table is formed.
        """
        if derivative_order == 0:
            return float(np.prod([f.norm(r) for f in self.factors]))
        if derivative_order != 1:
            raise KernelError("derivative_order must be 0 or 1")
        total = 0.0
        for i, fi in enumerate(self.factors):
            others = [f.norm(r) for k, f in enumerate(self.factors) if k != i]
            total += fi.norm(r, derivative=True) * float(np.prod(others))
        return total


def _window(z_scale: float) -> int:
    """Chernoff-type radius with two-sided tail below ``TAIL_TOL``."""
    if z_scale == 0:
        return 0
    L = math.log(2.0 / TAIL_TOL)
    b = 2.0 * L / 3.0
    var = 2.0 * z_scale
    return int(math.ceil(0.5 * (b + math.sqrt(b * b + 8.0 * L * var)))) + 2


def _poisson_correlation(z: float, J: int) -> np.ndarray:
    """``sum_m P(m) P(m + |j|)`` for ``|j| <= J`` with Poisson(z) weights."""
    half = 12.0 * math.sqrt(z) + 40.0
    lo = max(0, int(math.floor(z - half)))
    hi = int(math.ceil(z + half)) + J
    m = np.arange(lo, hi + 1)
    p = np.exp(poisson_log_weights(m, z))
    n = len(p)
    pos = np.array([np.dot(p[: n - j], p[j:]) for j in range(min(J, n - 1) + 1)])
    if len(pos) < J + 1:
        pos = np.concatenate([pos, np.zeros(J + 1 - len(pos))])
    return pos


def _bessel_route(z: complex, J: int) -> np.ndarray:
    # e^{-2z} I_j(2z) = ive(j, 2z) * e^{-2i Im z} for Re z > 0
    j = np.arange(J + 1)
    return special.ive(j, 2 * z) * np.exp(-2j * z.imag)


def _half_kernel(z: complex, J: int) -> np.ndarray:
    if z.imag == 0:
        return _poisson_correlation(z.real, J)
    if 2 * (abs(z) - z.real) <= _CANCELLATION_LIMIT:
        m = np.arange(0, int(abs(z) + 12 * math.sqrt(abs(z)) + 40) + J + 1)
        logmag = poisson_log_weights(m, abs(z)) + (abs(z) - z.real)
        p = np.exp(logmag + 1j * (m * np.angle(z) - z.imag))
        n = len(p)
        return np.array([np.sum(p[: n - j] * p[j:]) for j in range(J + 1)])
    return _bessel_route(z, J)


def kernel_1d(t: float, h: float, coeff: complex = 1.0, J: int | None = None) -> Kernel1D:
    """Discrete fundamental solution of ``du/dt = coeff * Delta^h u`` in one dimension.

    Parameters
    ----------
    t : float
        Time, ``t >= 0``.
    h : float
        Grid spacing.
    coeff : complex
        ``1`` for heat, ``alpha + 1j`` for damped Schrödinger.  ``Re(coeff) >= 0``.
    J : int, optional
        Truncation radius; chosen from a Chernoff tail bound when omitted.
    """
    if not (t >= 0 and np.isfinite(t)):
        raise KernelError(f"t: must be finite and >= 0, got {t!r}")
    if not h > 0:
        raise KernelError(f"h: must be positive, got {h!r}")
    coeff = complex(coeff)
    if coeff.real < 0 or coeff == 0:
        raise KernelError(f"coeff: need Re(coeff) >= 0 and coeff != 0, got {coeff}")
    z = coeff * t / h**2
    real = coeff.imag == 0
    if t == 0:
        vals = np.array([1.0 / h]) if real else np.array([1.0 / h + 0j])
        return Kernel1D(h, t, coeff, 0, vals)
    if J is None:
        if coeff.real == 0:
            # pure Schrödinger: w_j ~ J_j(2|z|), negligible once j - 2|z| >> (2|z|)^(1/3)
            x = 2 * abs(z)
            J = int(math.ceil(x + 12.0 * x ** (1 / 3) + 20))
        else:
            J = _window(abs(z) ** 2 / z.real)
    pad = max(5, J // 5)
    if J + pad > J_MAX:
        raise KernelError(f"truncation radius {J + pad} exceeds J_MAX = {J_MAX}")
    half = _half_kernel(z, J + pad)
    if real:
        half = half.real
    if not np.all(np.isfinite(half)):
        raise KernelError("non-finite kernel values")
    full = np.concatenate([half[:0:-1], half]) / h
    total = np.sum(np.abs(full))
    tail = np.sum(np.abs(full[: pad])) + np.sum(np.abs(full[-pad:]))
    if tail > 1e-14 * total:
        raise KernelError(f"kernel truncation at J = {J} not converged (tail {tail / total:.2e})")
    return Kernel1D(h, t, coeff, J, full[pad:-pad])


def kernel_d(t: float, h: float, coeff: complex = 1.0, d: int = 2) -> KernelD:
    k = kernel_1d(t, h, coeff)
    return KernelD(tuple([k] * d))


# ---------------------------------------------------------------------------
# solution operators


def _convolve_axis(values: np.ndarray, kernel: Kernel1D, spec: GridSpec, axis: int):
    """``u_j = h sum_l w_{j-l} f_l`` along one array axis."""
    w = kernel.h * kernel.values
    n = values.shape[axis]
    shape = [1] * values.ndim
    shape[axis] = -1
    if spec.periodic:
        folded = np.zeros(n, dtype=w.dtype)
        np.add.at(folded, kernel.offsets % n, w)
        spectrum = np.fft.fft(folded).reshape(shape)
        out = np.fft.ifft(np.fft.fft(values, axis=axis) * spectrum, axis=axis)
    else:
        m = n + 2 * kernel.J
        size = 1 << (m - 1).bit_length()
        spectrum = np.fft.fft(w, size).reshape(shape)
        full = np.fft.ifft(np.fft.fft(values, size, axis=axis) * spectrum, axis=axis)
        out = np.take(full, np.arange(kernel.J, kernel.J + n), axis=axis)
    return out


def apply_kernel(kernel: KernelD, f: Field | np.ndarray, spec: GridSpec | None = None):
    """Discrete convolution ``Phi^h(t) f`` applied per axis.

    Accepts a :class:`Field` (returns the same field type) or a raw array with
    an explicit ``spec``.  Under the far-field boundary the ghost value is
    subtracted, convolved as zero-extended data and added back.
    """
    if isinstance(f, Field):
        spec, values = f.spec, f.values
    else:
        if spec is None:
            raise ValueError("spec is required for raw arrays")
        values = np.asarray(f)
    if kernel.d != 2:
        raise KernelError("fields are two-dimensional; need a d = 2 kernel")
    if not math.isclose(kernel.h, spec.h, rel_tol=1e-12):
        raise KernelError(f"kernel spacing {kernel.h} does not match grid spacing {spec.h}")
    offset = 0.0 if spec.periodic else spec.ghost_value(values)
    out = values - offset
    for axis, factor in enumerate(kernel.factors):
        out = _convolve_axis(out, factor, spec, axis)
    real_kernel = all(np.isrealobj(fa.values) for fa in kernel.factors)
    if real_kernel and np.isrealobj(values):
        out = out.real
    out = out + offset
    if isinstance(f, Field):
        return f.with_values(out)
    return out


def duhamel_solve(f: Field | np.ndarray, forcing: np.ndarray, coeff: complex,
                  times: Sequence[float], spec: GridSpec | None = None):
    """``Phi(T - s_0) f + sum_k ds Phi(T - s_{k+1/2}) F(s_{k+1/2})``, ``T = times[-1]``.

    ``times`` is a uniform mesh ``s_0 < ... < s_n``.  ``forcing`` holds either
    the ``n`` midpoint values or the ``n + 1`` node values (averaged to
    midpoints).
    """
    if isinstance(f, Field):
        spec, f0 = f.spec, f.values
    else:
        if spec is None:
            raise ValueError("spec is required for raw arrays")
        f0 = np.asarray(f)
    times = np.asarray(times, dtype=float)
    forcing = np.asarray(forcing)
    n = len(times) - 1
    if n < 1:
        raise ValueError("times: need at least two mesh points")
    ds = np.diff(times)
    if np.any(ds <= 0) or np.ptp(ds) > 1e-9 * ds.mean():
        raise ValueError("times: mesh must be uniform and increasing")
    if forcing.shape[1:] != f0.shape:
        raise ValueError(f"forcing snapshots of shape {forcing.shape[1:]} do not match field {f0.shape}")
    if len(forcing) == n + 1:
        mid = 0.5 * (forcing[:-1] + forcing[1:])
    elif len(forcing) == n:
        mid = forcing
    else:
        raise ValueError(f"forcing: expected {n} or {n + 1} time samples, got {len(forcing)}")
    T = times[-1]
    result = apply_kernel(kernel_d(T - times[0], spec.h, coeff), f0, spec)
    zero_ff = spec
    if not spec.periodic:
        # forcing has zero far field
        zero_ff = GridSpec(spec.h, spec.nx, spec.ny, spec.boundary, (0.0, 0.0, 0.0), 0.0)
    for k in range(n):
        s = 0.5 * (times[k] + times[k + 1])
        result = result + ds[k] * apply_kernel(kernel_d(T - s, spec.h, coeff), mid[k], zero_ff)
    if isinstance(f, Field):
        return f.with_values(result)
    return result


# ---------------------------------------------------------------------------
# decay estimates


def target_slope(p: float, q: float, derivative_order: int, d: int = 2) -> float:
    """Exponent ``-(d/2)(1/q - 1/p) - order/2``."""
    return -(d / 2) * (1 / q - 1 / p) - 0.5 * derivative_order


@dataclass
class EstimateReport:
    times: np.ndarray
    norms: np.ndarray
    slope: float
    intercept: float
    target: float
    p: float
    q: float
    r: float
    derivative_order: int
    coeff: complex
    tolerance: float = 0.05

    @property
    def error(self) -> float:
        return abs(self.slope - self.target)

    @property
    def passed(self) -> bool:
        return self.error <= self.tolerance

    def summary(self) -> dict:
        return {
            "coeff": [self.coeff.real, self.coeff.imag],
            "p": _fmt_exp(self.p), "q": _fmt_exp(self.q), "r": _fmt_exp(self.r),
            "derivative_order": self.derivative_order,
            "slope": self.slope, "intercept": self.intercept, "target": self.target,
            "tolerance": self.tolerance, "passed": self.passed,
        }

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["t", "norm"])
            for t, v in zip(self.times, self.norms):
                writer.writerow([repr(float(t)), repr(float(v))])
            fh.write("# " + json.dumps(self.summary(), sort_keys=True) + "\n")


def _fmt_exp(v: float):
    return "inf" if np.isinf(v) else v


def verify_lplq(coeff: complex, h: float, p: float, q: float, derivative_order: int = 0,
                time_range: tuple[float, float] | None = None, n_samples: int = 12,
                d: int = 2) -> EstimateReport:
    """Fit the log-log slope of ``||K(t)||_{L^r_h}`` (or its gradient) over time.

    ``r`` solves ``1 + 1/p = 1/r + 1/q``, so by Young's inequality the kernel
    norm controls the ``L^q -> L^p`` operator norm.  Times are geometric in
    ``time_range`` (default ``[10 h^2, 10^4 h^2]``).
    """
    coeff = complex(coeff)
    if coeff.real <= 0:
        raise KernelError("decay estimates need Re(coeff) > 0 (damping alpha > 0)")
    if not 1 <= q <= p:
        raise KernelError(f"need 1 <= q <= p, got p={p}, q={q}")
    if derivative_order not in (0, 1):
        raise KernelError("derivative_order must be 0 or 1")
    if time_range is None:
        time_range = (10 * h**2, 1e4 * h**2)
    t0, t1 = time_range
    if not (0 < t0 < t1) or n_samples < 10 or t1 / t0 < 10:
        raise KernelError("time range must span at least a decade with >= 10 samples")
    inv_r = 1 + 1 / p - 1 / q
    r = math.inf if inv_r == 0 else 1 / inv_r
    times = np.geomspace(t0, t1, n_samples)
    norms = np.array([kernel_d(t, h, coeff, d).norm(r, derivative_order) for t in times])
    slope, intercept = np.polyfit(np.log(times), np.log(norms), 1)
    return EstimateReport(times, norms, float(slope), float(intercept),
                          target_slope(p, q, derivative_order, d), p, q, r,
                          derivative_order, coeff)
