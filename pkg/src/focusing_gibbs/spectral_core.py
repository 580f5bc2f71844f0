"""Truncated Fourier fields on T^d and on large periodic boxes.

A field is stored as its Fourier coefficients on the lattice
``{n : |n|_inf <= N}`` in centred order (array index ``i`` holds ``n = i - N``
along each axis).  On a box of side ``L`` the field is

    u(x) = sum_n u_hat(n) exp(2 pi i n . x / L),

so integrals over the box carry a factor ``L**d``.  The symbol of ``D`` is
``m(n) = 2 pi |n| / L`` under the TwoPi convention and ``|n| / L`` under the
Plain convention.

Real-space samples live on the uniform tensor grid ``x_j = -L/2 + j L / P``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Callable, Sequence, Union

import numpy as np

__all__ = [
    "Convention",
    "SpectralGrid",
    "SpectralField",
    "LowPass",
    "HighPass",
    "NonZeroModes",
    "ZeroModeOnly",
    "apply_fractional_derivative",
    "inverse_fractional_derivative",
    "sobolev_norm",
    "lp_norm",
    "l2_norm",
    "mean",
    "project",
    "field_from_values",
    "field_from_function",
    "quadrature_size",
    "to_real_space",
    "from_real_space",
    "batch_lp_power",
]


class Convention(str, Enum):
    TWOPI = "twopi"
    PLAIN = "plain"

    @property
    def factor(self) -> float:
        return 2.0 * math.pi if self is Convention.TWOPI else 1.0


def _next_pow2(n: int) -> int:
    return 1 << max(0, (int(n) - 1).bit_length())


def quadrature_size(modes: int, p: float = 2.0) -> int:
    """Points per dimension needed to integrate |u|^p without aliasing."""
    base = max(2 * modes + 2, math.ceil(p / 2.0) * (2 * modes + 1))
    return _next_pow2(base)


@dataclass(frozen=True)
class SpectralGrid:
    d: int
    modes: int
    box_side: float = 1.0
    convention: Convention = Convention.TWOPI

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ValueError(f"d must be 1, 2 or 3, got {self.d}")
        if int(self.modes) != self.modes or self.modes < 1:
            raise ValueError(f"modes must be a positive integer, got {self.modes}")
        if not (self.box_side > 0 and math.isfinite(self.box_side)):
            raise ValueError(f"box_side must be positive, got {self.box_side}")
        object.__setattr__(self, "modes", int(self.modes))
        object.__setattr__(self, "box_side", float(self.box_side))
        object.__setattr__(self, "convention", Convention(self.convention))

    @property
    def shape(self) -> tuple[int, ...]:
        return (2 * self.modes + 1,) * self.d

    @property
    def volume(self) -> float:
        return self.box_side**self.d

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-self.modes, self.modes + 1)

    def with_modes(self, modes: int) -> "SpectralGrid":
        return SpectralGrid(self.d, modes, self.box_side, self.convention)

    def with_box(self, box_side: float, convention: Convention | None = None) -> "SpectralGrid":
        conv = self.convention if convention is None else convention
        return SpectralGrid(self.d, self.modes, box_side, conv)

    def lattice(self) -> tuple[np.ndarray, ...]:
        return _lattice(self.d, self.modes)

    def lattice_norm(self) -> np.ndarray:
        """Euclidean |n| of every lattice point."""
        return _lattice_norm(self.d, self.modes)

    def sup_norm(self) -> np.ndarray:
        return _sup_norm(self.d, self.modes)

    def symbol(self) -> np.ndarray:
        """m(n) under the grid convention."""
        return self.convention.factor * self.lattice_norm() / self.box_side

    def quadrature_points(self, p: float = 2.0) -> int:
        return quadrature_size(self.modes, p)

    def coordinates(self, points: int) -> np.ndarray:
        return -0.5 * self.box_side + self.box_side * np.arange(points) / points


@lru_cache(maxsize=64)
def _lattice(d: int, modes: int) -> tuple[np.ndarray, ...]:
    axis = np.arange(-modes, modes + 1)
    grids = np.meshgrid(*([axis] * d), indexing="ij")
    for g in grids:
        g.flags.writeable = False
    return tuple(grids)


@lru_cache(maxsize=64)
def _lattice_norm(d: int, modes: int) -> np.ndarray:
    out = np.sqrt(sum(g.astype(float) ** 2 for g in _lattice(d, modes)))
    out.flags.writeable = False
    return out


@lru_cache(maxsize=64)
def _sup_norm(d: int, modes: int) -> np.ndarray:
    out = np.max(np.abs(np.stack(_lattice(d, modes))), axis=0)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class SpectralField:
    grid: SpectralGrid
    coeffs: np.ndarray
    is_real: bool = False

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex, copy=True)
        if c.shape != self.grid.shape:
            raise ValueError(f"coefficient shape {c.shape} does not match grid {self.grid.shape}")
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, grid: SpectralGrid, is_real: bool = False) -> "SpectralField":
        return cls(grid, np.zeros(grid.shape, dtype=complex), is_real)

    @classmethod
    def single_mode(cls, grid: SpectralGrid, n: Sequence[int], amplitude: complex = 1.0) -> "SpectralField":
        c = np.zeros(grid.shape, dtype=complex)
        c[tuple(int(k) + grid.modes for k in n)] = amplitude
        return cls(grid, c)

    @classmethod
    def constant(cls, grid: SpectralGrid, value: complex) -> "SpectralField":
        return cls.single_mode(grid, (0,) * grid.d, value)

    def _like(self, coeffs: np.ndarray, is_real: bool | None = None) -> "SpectralField":
        return SpectralField(self.grid, coeffs, self.is_real if is_real is None else is_real)

    def _check(self, other: "SpectralField"):
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self._check(other)
        return self._like(self.coeffs + other.coeffs, self.is_real and other.is_real)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self._check(other)
        return self._like(self.coeffs - other.coeffs, self.is_real and other.is_real)

    def __neg__(self) -> "SpectralField":
        return self._like(-self.coeffs)

    def __mul__(self, scalar: complex) -> "SpectralField":
        real = self.is_real and np.isreal(scalar)
        return self._like(self.coeffs * scalar, bool(real))

    __rmul__ = __mul__

    def translate(self, shift: Sequence[float]) -> "SpectralField":
        """u(x - shift)."""
        phase = np.ones(self.grid.shape, dtype=complex)
        for g, a in zip(self.grid.lattice(), shift):
            phase = phase * np.exp(-2j * np.pi * g * a / self.grid.box_side)
        return self._like(self.coeffs * phase)

    def conjugate_symmetric(self) -> bool:
        flipped = np.conj(self.coeffs[(slice(None, None, -1),) * self.grid.d])
        scale = max(1.0, float(np.max(np.abs(self.coeffs))))
        return bool(np.allclose(self.coeffs, flipped, rtol=0, atol=1e-13 * scale))

    def values(self, points: int | None = None) -> np.ndarray:
        """Real-space samples on the tensor grid with ``points`` per dimension."""
        P = self.grid.quadrature_points() if points is None else points
        return to_real_space(self.coeffs, self.grid, P)

    def evaluate(self, axes: Sequence[np.ndarray]) -> np.ndarray:
        """Values on an arbitrary tensor product of per-axis coordinates."""
        out = self.coeffs
        L = self.grid.box_side
        n = self.grid.indices
        for k, x in enumerate(axes):
            E = np.exp(2j * np.pi * np.outer(np.asarray(x, float), n) / L)
            out = np.moveaxis(np.tensordot(E, out, axes=([1], [k])), 0, k)
        return out


# ---------------------------------------------------------------- transforms


def _fft_index(grid: SpectralGrid, points: int) -> tuple:
    if points < 2 * grid.modes + 1:
        raise ValueError(f"{points} points cannot hold {2 * grid.modes + 1} modes per axis")
    idx = grid.indices % points
    return np.ix_(*([idx] * grid.d))


def _centering_phase(grid: SpectralGrid) -> np.ndarray:
    # x_0 = -L/2 contributes exp(-i pi n) = (-1)^n per axis
    sign = np.where(grid.indices % 2 == 0, 1.0, -1.0)
    out = sign
    for _ in range(grid.d - 1):
        out = np.multiply.outer(out, sign)
    return out


def to_real_space(coeffs: np.ndarray, grid: SpectralGrid, points: int) -> np.ndarray:
    """Evaluate coefficients (optionally with leading batch axes) on the grid."""
    coeffs = np.asarray(coeffs)
    batch = coeffs.shape[: coeffs.ndim - grid.d]
    arr = np.zeros(batch + (points,) * grid.d, dtype=complex)
    idx = _fft_index(grid, points)
    arr[(Ellipsis,) + idx] = coeffs * _centering_phase(grid)
    axes = tuple(range(-grid.d, 0))
    return np.fft.ifftn(arr, axes=axes) * points**grid.d


def from_real_space(values: np.ndarray, grid: SpectralGrid) -> np.ndarray:
    """Coefficients of the band-|n|_inf <= N part of the sampled function."""
    values = np.asarray(values)
    points = values.shape[-1]
    axes = tuple(range(-grid.d, 0))
    spec = np.fft.fftn(values, axes=axes) / points**grid.d
    return spec[(Ellipsis,) + _fft_index(grid, points)] * _centering_phase(grid)


def field_from_values(grid: SpectralGrid, values: np.ndarray, is_real: bool | None = None) -> SpectralField:
    values = np.asarray(values)
    if is_real is None:
        is_real = bool(np.isrealobj(values) or np.all(values.imag == 0))
    coeffs = from_real_space(values, grid)
    if is_real:
        flipped = np.conj(coeffs[(slice(None, None, -1),) * grid.d])
        coeffs = 0.5 * (coeffs + flipped)
    return SpectralField(grid, coeffs, is_real)


def field_from_function(grid: SpectralGrid, f: Callable[..., np.ndarray], points: int | None = None) -> SpectralField:
    """Band-limit a function given on the box by sampling it on a fine grid."""
    P = points or _next_pow2(4 * (2 * grid.modes + 1))
    x = grid.coordinates(P)
    mesh = np.meshgrid(*([x] * grid.d), indexing="ij")
    return field_from_values(grid, f(*mesh))


# ---------------------------------------------------------------- operators


def apply_fractional_derivative(u: SpectralField, s: float) -> SpectralField:
    if s < 0:
        raise ValueError(f"s must be nonnegative, got {s}; use inverse_fractional_derivative")
    if s == 0:
        return u
    m = u.grid.symbol()
    return u._like(u.coeffs * m**s)


def inverse_fractional_derivative(u: SpectralField, s: float) -> SpectralField:
    """D^{-s} on the nonzero modes; the zero mode is dropped."""
    m = u.grid.symbol()
    mult = np.zeros_like(m)
    nz = m > 0
    mult[nz] = m[nz] ** (-float(s))
    return u._like(u.coeffs * mult)


@dataclass(frozen=True)
class LowPass:
    cutoff: int


@dataclass(frozen=True)
class HighPass:
    cutoff: int


@dataclass(frozen=True)
class NonZeroModes:
    pass


@dataclass(frozen=True)
class ZeroModeOnly:
    pass


Selector = Union[LowPass, HighPass, NonZeroModes, ZeroModeOnly]


def selector_mask(grid: SpectralGrid, selector: Selector) -> np.ndarray:
    sup = grid.sup_norm()
    if isinstance(selector, (LowPass, HighPass)):
        if selector.cutoff > grid.modes or selector.cutoff < 0:
            raise ValueError(f"cutoff {selector.cutoff} outside 0..{grid.modes}")
        low = sup <= selector.cutoff
        return low if isinstance(selector, LowPass) else ~low
    if isinstance(selector, NonZeroModes):
        return sup > 0
    if isinstance(selector, ZeroModeOnly):
        return sup == 0
    raise TypeError(f"unknown selector {selector!r}")


def project(u: SpectralField, selector: Selector) -> SpectralField:
    return u._like(np.where(selector_mask(u.grid, selector), u.coeffs, 0))


# ---------------------------------------------------------------- norms


def mean(u: SpectralField) -> complex:
    return complex(u.coeffs[(u.grid.modes,) * u.grid.d])


def l2_norm(u: SpectralField) -> float:
    return math.sqrt(u.grid.volume * float(np.sum(np.abs(u.coeffs) ** 2)))


def sobolev_norm(u: SpectralField, s: float) -> float:
    """Homogeneous norm (L^d sum_{n != 0} m(n)^{2s} |u_hat(n)|^2)^{1/2}."""
    m = u.grid.symbol()
    nz = m > 0
    w = m[nz] ** (2.0 * s)
    return math.sqrt(u.grid.volume * float(np.sum(w * np.abs(u.coeffs[nz]) ** 2)))


def batch_lp_power(coeffs: np.ndarray, grid: SpectralGrid, p: float) -> np.ndarray:
    """int |u|^p over the box for a stack of coefficient arrays."""
    P = grid.quadrature_points(p)
    vals = np.abs(to_real_space(coeffs, grid, P))
    axes = tuple(range(-grid.d, 0))
    if p == 2:
        powered = vals * vals
    elif float(p).is_integer():
        powered = vals ** int(p)
    else:
        powered = vals**p
    return np.sum(powered, axis=axes) * grid.volume / P**grid.d


def lp_norm(u: SpectralField, p: float) -> float:
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if p == 2:
        return l2_norm(u)
    if math.isinf(p):
        P = _next_pow2(4 * (2 * u.grid.modes + 1))
        return float(np.max(np.abs(u.values(P))))
    return float(batch_lp_power(u.coeffs, u.grid, p)) ** (1.0 / p)
