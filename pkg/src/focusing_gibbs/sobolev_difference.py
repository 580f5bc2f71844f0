"""Difference-quotient characterization of homogeneous Sobolev norms.

For ``k > s > 0``

    c_k(d, s) = int_{R^d} |exp(2 pi i x_1) - 1|^{2k} / |x|^{d+2s} dx

and for a field on a box of side ``L``

    int_{R^d} int_box |Delta_y^k u(x)|^2 / |y|^{d+2s} dx dy
        = c_k * L^d * sum_n (|n|/L)^{2s} |u_hat(n)|^2,

i.e. the Plain-convention norm.  The y-integral is reduced to one radial
integral of the sphere average

    A_k(r) = C(2k,k) + 2 sum_{j=1}^k (-1)^j C(2k,k+j) Phi_d(2 pi j r),
    Phi_d(z) = Gamma(d/2) (2/z)^{d/2-1} J_{d/2-1}(z),

over log-spaced shells refined into panels short enough to follow the
oscillation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
from scipy import special

from .gns_ground_state import GnsParameters
from .spectral_core import (
    SpectralField,
    SpectralGrid,
    lp_norm,
    l2_norm,
    sobolev_norm,
)

__all__ = [
    "DifferenceNormSpec",
    "DifferenceNormResult",
    "TorusGnsReport",
    "forward_difference",
    "stencil_difference",
    "c_k_constant",
    "difference_norm",
    "difference_norm_parts",
    "verify_torus_gns",
    "fit_c_delta",
    "restriction_comparison",
    "periodize",
    "sphere_area",
]


def sphere_area(d: int) -> float:
    """Surface measure of S^{d-1} (2 for d = 1)."""
    return 2 * math.pi ** (d / 2) / math.gamma(d / 2)


@dataclass(frozen=True)
class DifferenceNormSpec:
    k: int = 1
    ball_radius: float = 1e3
    inner_radius: float = 1e-6
    shells_per_decade: int = 8
    nodes: int = 16
    panels_per_period: int = 2

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k}")
        if not self.ball_radius > self.inner_radius > 0:
            raise ValueError("need ball_radius > inner_radius > 0")
        if self.nodes < 2 or self.shells_per_decade < 1 or self.panels_per_period < 1:
            raise ValueError("quadrature resolution must be positive")

    def refined(self, levels: int = 1) -> "DifferenceNormSpec":
        f = 2**levels
        return DifferenceNormSpec(self.k, self.ball_radius, self.inner_radius,
                                  self.shells_per_decade * f, self.nodes, self.panels_per_period * f)

    def check(self, s: float):
        if not 0 < s < self.k:
            raise ValueError(f"need 0 < s < k, got s = {s}, k = {self.k}")


# ---------------------------------------------------------------- operators


def _difference_multiplier(grid: SpectralGrid, y: Sequence[float], k: int) -> np.ndarray:
    phase = sum(g * yi for g, yi in zip(grid.lattice(), y)) / grid.box_side
    return (np.exp(2j * np.pi * phase) - 1.0) ** k


def forward_difference(u: SpectralField, y: Sequence[float], k: int) -> SpectralField:
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.shape != (u.grid.d,):
        raise ValueError(f"displacement must have {u.grid.d} components")
    return SpectralField(u.grid, u.coeffs * _difference_multiplier(u.grid, y, k), u.is_real)


def stencil_difference(values: np.ndarray, shift: Sequence[int], k: int) -> np.ndarray:
    """sum_j (-1)^{k-j} C(k,j) u(x + j y) for a displacement of whole grid cells."""
    out = np.zeros_like(values)
    for j in range(k + 1):
        rolled = np.roll(values, [-j * int(t) for t in shift], axis=tuple(range(values.ndim)))
        out = out + (-1) ** (k - j) * math.comb(k, j) * rolled
    return out


# ---------------------------------------------------------------- radial integrals


@lru_cache(maxsize=64)
def _series_coefficients(k: int, d: int, terms: int = 40) -> np.ndarray:
    """Taylor coefficients in z^{2m} of the sphere average, m = 0..terms-1.

    Only m >= k survive: sum_j (-1)^j C(2k, k+j) j^{2m} vanishes below k.
    """
    out = np.zeros(terms)
    for m in range(k, terms):
        s_m = sum((-1) ** j * math.comb(2 * k, k + j) * j ** (2 * m) for j in range(-k, k + 1))
        moment = math.exp(math.lgamma(d / 2) + math.lgamma(m + 0.5) - 0.5 * math.log(math.pi) - math.lgamma(m + d / 2))
        out[m] = (-1) ** m * s_m * moment / math.factorial(2 * m)
    return out


def _sphere_average(r: np.ndarray, k: int, d: int) -> np.ndarray:
    """Average of |exp(2 pi i r omega_1) - 1|^{2k} over the unit sphere."""
    r = np.asarray(r, dtype=float)
    if d == 1:
        return (2 * np.sin(np.pi * r)) ** (2 * k)
    out = np.full_like(r, float(math.comb(2 * k, k)))
    for j in range(1, k + 1):
        z = 2 * np.pi * j * r
        phi = special.j0(z) if d == 2 else np.sinc(z / np.pi)
        out += 2 * (-1) ** j * math.comb(2 * k, k + j) * phi
    # the cosine expansion cancels to O(z^{2k}) near the origin; use the series there
    z = 2 * np.pi * r
    small = z < 2.0
    if np.any(small):
        coef = _series_coefficients(k, d)
        out[small] = np.polynomial.polynomial.polyval(z[small] ** 2, coef)
    return np.clip(out, 0.0, None)


def _small_r_integral(r0: float, k: int, d: int, s: float) -> float:
    # A_k(r) ~ (2 pi r)^{2k} E|omega_1|^{2k} near the origin
    moment = math.gamma(d / 2) * math.gamma(k + 0.5) / (math.sqrt(math.pi) * math.gamma(k + d / 2))
    return (2 * math.pi) ** (2 * k) * moment * r0 ** (2 * k - 2 * s) / (2 * k - 2 * s)


def _panel_edges(spec: DifferenceNormSpec, r_max: float, extra: Iterable[float] = ()) -> np.ndarray:
    lo = math.log10(spec.inner_radius)
    hi = math.log10(r_max)
    count = max(1, math.ceil((hi - lo) * spec.shells_per_decade))
    edges = [np.logspace(lo, hi, count + 1)]
    # oscillation period 1/k in r; keep panels no wider than period / panels_per_period
    width = 1.0 / (spec.k * spec.panels_per_period)
    if r_max > width:
        edges.append(np.arange(width, r_max, width))
    edges.append(np.asarray(list(extra), dtype=float))
    e = np.unique(np.concatenate(edges))
    return e[(e >= spec.inner_radius) & (e <= r_max)]


@lru_cache(maxsize=32)
def _gauss_legendre(n: int):
    return np.polynomial.legendre.leggauss(n)


def _cumulative_radial(spec: DifferenceNormSpec, d: int, s: float, r_max: float,
                       marks: Sequence[float] = ()) -> tuple[np.ndarray, np.ndarray]:
    """Edges and int_0^{edge} r^{-1-2s} A_k(r) dr at every edge."""
    edges = _panel_edges(spec, r_max, marks)
    x, w = _gauss_legendre(spec.nodes)
    a, b = edges[:-1], edges[1:]
    half = 0.5 * (b - a)
    nodes = (0.5 * (a + b))[:, None] + half[:, None] * x[None, :]
    vals = nodes ** (-1.0 - 2 * s) * _sphere_average(nodes, spec.k, d)
    panels = half * (vals @ w)
    cum = np.concatenate([[0.0], np.cumsum(panels)]) + _small_r_integral(spec.inner_radius, spec.k, d, s)
    return edges, cum


def _tail_mean(k: int, d: int, s: float, R: float) -> float:
    return sphere_area(d) * math.comb(2 * k, k) * R ** (-2 * s) / (2 * s)


def _tail_bound(k: int, d: int, s: float, R: float) -> float:
    return sphere_area(d) * 4.0**k * R ** (-2 * s) / (2 * s)


def c_k_constant(d: int, s: float, k: int, spec: DifferenceNormSpec | None = None) -> float:
    """c_k(d, s) by radial quadrature to the ball radius plus the mean tail."""
    spec = spec or DifferenceNormSpec(k=k, ball_radius=1e4)
    if spec.k != k:
        spec = DifferenceNormSpec(k, spec.ball_radius, spec.inner_radius, spec.shells_per_decade,
                                  spec.nodes, spec.panels_per_period)
    if d not in (1, 2, 3):
        raise ValueError(f"d must be 1, 2 or 3, got {d}")
    if not 0 < s < k:
        raise ValueError(f"need 0 < s < k, got s = {s}, k = {k}")
    _, cum = _cumulative_radial(spec, d, s, spec.ball_radius)
    return sphere_area(d) * cum[-1] + _tail_mean(k, d, s, spec.ball_radius)


@dataclass(frozen=True)
class DifferenceNormResult:
    truncated: float
    tail_estimate: float
    tail_bound: float
    c_k: float

    @property
    def value(self) -> float:
        return self.truncated + self.tail_estimate

    @property
    def interval(self) -> tuple[float, float]:
        return self.truncated, self.truncated + self.tail_bound


def difference_norm_parts(u: SpectralField, s: float, spec: DifferenceNormSpec) -> DifferenceNormResult:
    """Squared difference-quotient norm of u in u's own convention.

    The y-integral over |y| <= R is done by quadrature; the tail beyond R is
    added at its mean value and also bounded using |exp(i t) - 1| <= 2.
    """
    spec.check(s)
    g = u.grid
    d, k, L = g.d, spec.k, g.box_side
    ck = c_k_constant(d, s, k, DifferenceNormSpec(k, max(spec.ball_radius, 1e4), spec.inner_radius,
                                                  spec.shells_per_decade, spec.nodes, spec.panels_per_period))
    power = np.abs(u.coeffs) ** 2 * g.volume
    radius = g.lattice_norm()
    nz = (radius > 0) & (power > 0)
    if not np.any(nz):
        return DifferenceNormResult(0.0, 0.0, 0.0, ck)
    norms, inverse = np.unique(radius[nz], return_inverse=True)
    # int_{|y|<=R} |e^{2 pi i n.y/L} - 1|^{2k} |y|^{-d-2s} dy = (|n|/L)^{2s} I(R |n| / L)
    marks = norms * spec.ball_radius / L
    edges, cum = _cumulative_radial(spec, d, s, float(marks.max()), marks)
    at = cum[np.searchsorted(edges, marks)] * sphere_area(d)
    per_norm = (norms / L) ** (2 * s) * at
    truncated = float(np.sum(per_norm[inverse] * power[nz])) / ck
    mass = float(np.sum(power[nz]))
    tail = _tail_mean(k, d, s, spec.ball_radius) * mass / ck
    bound = _tail_bound(k, d, s, spec.ball_radius) * mass / ck
    scale = g.convention.factor ** (2 * s)
    return DifferenceNormResult(scale * truncated, scale * tail, scale * bound, ck)


def difference_norm(u: SpectralField, s: float, spec: DifferenceNormSpec) -> float:
    return difference_norm_parts(u, s, spec).value


# ---------------------------------------------------------------- torus GNS


@dataclass(frozen=True)
class TorusGnsReport:
    field_id: str
    lhs: float
    middle: float
    mass_term: float
    rhs: float
    c_gns: float
    delta: float
    c_delta: float

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def relative_margin(self) -> float:
        return self.margin / self.lhs if self.lhs > 0 else math.inf


def _gns_terms(u: SpectralField, s: float, p: float):
    d = u.grid.d
    a = (p - 2) * d / (2 * s)
    b = 2 + (p - 2) * (2 * s - d) / (2 * s)
    lhs = lp_norm(u, p) ** p
    hs, l2 = sobolev_norm(u, s), l2_norm(u)
    middle = (hs**a if a > 0 else 1.0) * l2**b
    return lhs, middle, l2**p


def verify_torus_gns(u: SpectralField, s: float, p: float, delta: float, c_delta: float,
                     c_gns: float, field_id: str = "") -> TorusGnsReport:
    """Evaluate both sides of the torus inequality

        ||u||_p^p <= (C_GNS + delta) ||u||_H^a ||u||_2^b + C(delta) ||u||_2^p.

    ``c_gns`` must be the sharp constant for the convention of ``u``'s grid.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    GnsParameters(u.grid.d, s, p)
    lhs, middle, mass_term = _gns_terms(u, s, p)
    rhs = (c_gns + delta) * middle + c_delta * mass_term
    return TorusGnsReport(field_id, lhs, middle, mass_term, rhs, c_gns, delta, c_delta)


def fit_c_delta(corpus: Iterable[SpectralField], s: float, p: float, delta: float, c_gns: float) -> float:
    best = 1.0
    for u in corpus:
        lhs, middle, mass_term = _gns_terms(u, s, p)
        if mass_term > 0:
            best = max(best, (lhs - (c_gns + delta) * middle) / mass_term)
    return best


# ---------------------------------------------------------------- restriction


def periodize(u: SpectralField) -> SpectralField:
    """Periodization onto the unit torus of a field on an integer-sided box.

    If u has box coefficients c(m), the periodization sum_k u(x + k) has
    torus coefficients L^d c(n L).
    """
    g = u.grid
    L = int(round(g.box_side))
    if abs(g.box_side - L) > 1e-12 or L < 1:
        raise ValueError("periodization needs an integer box side")
    n_t = g.modes // L
    torus = SpectralGrid(g.d, max(n_t, 1), 1.0, g.convention)
    sl = tuple(slice(g.modes - L * torus.modes, g.modes + L * torus.modes + 1, L) for _ in range(g.d))
    return SpectralField(torus, g.volume * u.coeffs[sl], u.is_real)


@dataclass(frozen=True)
class RestrictionComparison:
    torus_norm: float
    line_norm: float
    torus_le_line: bool


def restriction_comparison(u_R: SpectralField, s: float = 1.0, rtol: float = 1e-10) -> RestrictionComparison:
    torus = sobolev_norm(periodize(u_R), s)
    line = sobolev_norm(u_R, s)
    return RestrictionComparison(torus, line, bool(torus <= line * (1 + rtol)))
