"""Sampling of fractional Gaussian free fields on T^d.

The massless complex field has coefficients ``g_n / sigma(n)`` with
``sigma(n) = m(n)^s`` and independent standard complex Gaussians ``g_n``
(``E|g_n|^2 = 1``); the zero mode is 0.  The massive variant uses
``sigma(n) = (1 + m(n)^2)^{s/2}`` and samples the zero mode.  The real variant
draws one ``g_n`` per pair ``{n, -n}`` and sets ``g_{-n} = conj(g_n)``.

Gaussians are consumed in the canonical mode order of :mod:`.rng`, so a
sample at truncation ``N'`` is the low-pass projection of the sample at
``N > N'`` drawn from the same generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import partial

import numpy as np

from .parallel import concat, map_chunks
from .rng import SampleStream, canonical_order, half_lattice_order
from .spectral_core import SpectralField, SpectralGrid, batch_lp_power, quadrature_size, to_real_space

__all__ = [
    "FieldVariant",
    "FieldLaw",
    "CovarianceReport",
    "MomentSummary",
    "CutoffProbability",
    "sample_field",
    "sample_coefficients",
    "covariance_report",
    "moment_statistics",
    "mass_cutoff_probability",
    "sample_masses",
]


class FieldVariant(str, Enum):
    MASSLESS_COMPLEX = "massless_complex"
    MASSIVE_COMPLEX = "massive_complex"
    MASSLESS_REAL = "massless_real"


@dataclass(frozen=True)
class FieldLaw:
    s: float
    variant: FieldVariant = FieldVariant.MASSLESS_COMPLEX

    def __post_init__(self):
        object.__setattr__(self, "variant", FieldVariant(self.variant))
        if not self.s > 0:
            raise ValueError(f"s must be positive, got {self.s}")

    def is_function_valued(self, d: int) -> bool:
        return self.s > d / 2

    def mode_std(self, grid: SpectralGrid) -> np.ndarray:
        """1 / sigma(n), zero where the mode is not sampled."""
        m = grid.symbol()
        if self.variant is FieldVariant.MASSIVE_COMPLEX:
            return (1.0 + m * m) ** (-self.s / 2)
        out = np.zeros_like(m)
        nz = m > 0
        out[nz] = m[nz] ** (-self.s)
        return out

    def mode_variance(self, grid: SpectralGrid) -> np.ndarray:
        return self.mode_std(grid) ** 2

    def expected_mass_squared(self, grid: SpectralGrid) -> float:
        return grid.volume * float(np.sum(self.mode_variance(grid)))


def _draw(law: FieldLaw, grid: SpectralGrid, gen: np.random.Generator) -> np.ndarray:
    size = (2 * grid.modes + 1) ** grid.d
    flat = np.zeros(size, dtype=complex)
    if law.variant is FieldVariant.MASSLESS_REAL:
        reps, partner = half_lattice_order(grid.d, grid.modes)
        g = gen.standard_normal(2 * len(reps))
        z = (g[0::2] + 1j * g[1::2]) * math.sqrt(0.5)
        flat[reps] = z
        flat[partner] = np.conj(z)
    else:
        order = canonical_order(grid.d, grid.modes)
        g = gen.standard_normal(2 * size)
        flat[order] = (g[0::2] + 1j * g[1::2]) * math.sqrt(0.5)
    return flat.reshape(grid.shape) * law.mode_std(grid)


def sample_field(law: FieldLaw, grid: SpectralGrid, rng: np.random.Generator) -> SpectralField:
    return SpectralField(grid, _draw(law, grid, rng), law.variant is FieldVariant.MASSLESS_REAL)


def sample_coefficients(law: FieldLaw, grid: SpectralGrid, stream: SampleStream, start: int, stop: int) -> np.ndarray:
    """Coefficient arrays for sample indices ``start..stop-1``, stacked."""
    out = np.empty((stop - start,) + grid.shape, dtype=complex)
    for j, i in enumerate(range(start, stop)):
        out[j] = _draw(law, grid, stream.generator(i))
    return out


def _masses_chunk(law, grid, stream, start, stop):
    c = sample_coefficients(law, grid, stream, start, stop)
    axes = tuple(range(1, grid.d + 1))
    return np.sqrt(grid.volume * np.sum(np.abs(c) ** 2, axis=axes))


def sample_masses(law: FieldLaw, grid: SpectralGrid, samples: int, stream: SampleStream, workers: int = 1) -> np.ndarray:
    """L^2 norms of ``samples`` fields, in sample-index order."""
    parts = map_chunks(partial(_masses_chunk, law, grid, stream), samples, workers)
    return concat(parts)


# ---------------------------------------------------------------- covariance


@dataclass(frozen=True)
class CovarianceReport:
    modes: np.ndarray  # (k, d) lattice points
    empirical: np.ndarray
    target: np.ndarray
    stderr: np.ndarray
    samples: int
    cross_modes: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), dtype=int))
    cross_empirical: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))
    cross_stderr: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def z_scores(self) -> np.ndarray:
        return (self.empirical - self.target) / self.stderr

    def cross_z_scores(self) -> np.ndarray:
        return np.abs(self.cross_empirical) / self.cross_stderr

    def rows(self):
        for n, e, t, se in zip(self.modes, self.empirical, self.target, self.stderr):
            yield {"mode": " ".join(str(int(k)) for k in n), "empirical": float(e), "target": float(t),
                   "stderr": float(se), "samples": self.samples}


def _cov_chunk(law, grid, stream, flat_idx, start, stop):
    c = sample_coefficients(law, grid, stream, start, stop).reshape(stop - start, -1)
    return c[:, flat_idx]


def covariance_report(law: FieldLaw, grid: SpectralGrid, samples: int, stream: SampleStream,
                      max_mode: int = 8, workers: int = 1) -> CovarianceReport:
    """Per-mode second moments for 0 < |n| <= max_mode (and n = 0 when the
    variant samples it), plus correlations of neighbouring mode pairs."""
    if samples < 100:
        raise ValueError("a covariance report needs at least 100 samples")
    r = grid.lattice_norm()
    sel = (r <= max_mode) & (law.mode_variance(grid) > 0)
    flat_idx = np.flatnonzero(sel.ravel())
    pts = np.stack(np.unravel_index(flat_idx, grid.shape), axis=-1) - grid.modes
    draws = concat(map_chunks(partial(_cov_chunk, law, grid, stream, flat_idx), samples, workers))
    sq = np.abs(draws) ** 2
    emp = sq.mean(axis=0)
    se = sq.std(axis=0, ddof=1) / math.sqrt(samples)
    target = law.mode_variance(grid).ravel()[flat_idx]
    # consecutive distinct modes; conjugate partners of the real variant are
    # excluded since they are perfectly correlated by construction
    pairs = []
    for a in range(len(flat_idx) - 1):
        if not np.all(pts[a] == -pts[a + 1]):
            pairs.append((a, a + 1))
    pairs = np.array(pairs, dtype=int).reshape(-1, 2)
    prod = draws[:, pairs[:, 0]] * np.conj(draws[:, pairs[:, 1]])
    cross = prod.mean(axis=0)
    cross_se = np.sqrt(np.var(prod.real, axis=0, ddof=1) + np.var(prod.imag, axis=0, ddof=1)) / math.sqrt(samples)
    return CovarianceReport(pts, emp, target, se, samples, pairs, cross, cross_se)


# ---------------------------------------------------------------- moments


@dataclass(frozen=True)
class MomentSummary:
    q: float
    p: float
    modes: int
    samples: int
    mean: float
    variance: float
    max: float
    stderr: float
    divergent_regime: bool = False
    converged: bool | None = None
    doubled_mean: float | None = None
    doubled_stderr: float | None = None


def _norm_power_chunk(law, grid, stream, q, p, start, stop):
    c = sample_coefficients(law, grid, stream, start, stop)
    axes = tuple(range(1, grid.d + 1))
    if q == 2:
        norms = np.sqrt(grid.volume * np.sum(np.abs(c) ** 2, axis=axes))
    elif math.isinf(q):
        P = quadrature_size(grid.modes, 8.0)
        norms = np.max(np.abs(to_real_space(c, grid, P)).reshape(len(c), -1), axis=1)
    else:
        norms = batch_lp_power(c, grid, q) ** (1.0 / q)
    return norms**p


def _moment(law, grid, q, p, samples, stream, workers):
    vals = concat(map_chunks(partial(_norm_power_chunk, law, grid, stream, q, p), samples, workers))
    var = float(np.var(vals, ddof=1)) if samples > 1 else 0.0
    return float(np.mean(vals)), var, float(np.max(vals)), math.sqrt(var / samples)


def moment_statistics(law: FieldLaw, grid: SpectralGrid, q: float, p: float, samples: int,
                      stream: SampleStream, check_stabilization: bool = False, workers: int = 1) -> MomentSummary:
    """Empirical moments of ``||u||_{L^q}^p``.

    With ``check_stabilization`` the estimate is repeated at ``2N`` on the same
    stream; the report is converged when the two differ by less than two
    combined standard errors.
    """
    if samples < 1:
        raise ValueError("samples must be positive")
    flagged = not law.is_function_valued(grid.d)
    if p == 0:
        return MomentSummary(q, p, grid.modes, samples, 1.0, 0.0, 1.0, 0.0, flagged, True if check_stabilization else None)
    m, v, mx, se = _moment(law, grid, q, p, samples, stream, workers)
    if not check_stabilization:
        return MomentSummary(q, p, grid.modes, samples, m, v, mx, se, flagged)
    m2, _, _, se2 = _moment(law, grid.with_modes(2 * grid.modes), q, p, samples, stream, workers)
    ok = abs(m2 - m) < 2.0 * math.hypot(se, se2)
    return MomentSummary(q, p, grid.modes, samples, m, v, mx, se, flagged, ok, m2, se2)


@dataclass(frozen=True)
class CutoffProbability:
    K: float
    samples: int
    estimate: float
    stderr: float


def mass_cutoff_probability(law: FieldLaw, grid: SpectralGrid, K: float, samples: int,
                            stream: SampleStream, workers: int = 1) -> CutoffProbability:
    if K < 0:
        raise ValueError(f"K must be nonnegative, got {K}")
    masses = sample_masses(law, grid, samples, stream, workers)
    # K = 0 is only reached by the zero field, which has probability zero
    hit = (masses <= K) & (masses > 0) if K == 0 else masses <= K
    est = float(np.mean(hit))
    return CutoffProbability(K, samples, est, math.sqrt(est * (1 - est) / samples))
