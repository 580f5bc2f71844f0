"""Monte Carlo estimation of truncated focusing partition functions.

    Z_N = E[ exp(R_p(u_N)) 1{||u_N||_2 <= K} ],   R_p(u) = (1/p) int |u|^p,

is estimated from i.i.d. samples of the truncated field.  Weights are kept in
log form so nothing overflows; an empty accepted set gives ``-inf``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import partial
from typing import Sequence

import numpy as np

from .gaussian_fields import FieldLaw, sample_coefficients
from .gns_ground_state import GnsParameters, critical_exponent, solve_ground_state
from .parallel import concat, map_chunks
from .rng import SampleStream
from .spectral_core import Convention, SpectralField, SpectralGrid, batch_lp_power, lp_norm

__all__ = [
    "Verdict",
    "PartitionEstimate",
    "SampleSet",
    "TransitionReport",
    "potential_energy",
    "draw_sample_set",
    "estimate_partition",
    "estimate_from_log_weights",
    "divergence_diagnostic",
    "partition_ladder",
    "threshold_scan",
]


class Verdict(str, Enum):
    CONVERGENT = "convergent"
    DIVERGENT = "divergent"
    INCONCLUSIVE = "inconclusive"


def potential_energy(u: SpectralField, p: float) -> float:
    if not p > 2:
        raise ValueError(f"p must exceed 2, got {p}")
    return lp_norm(u, p) ** p / p


@dataclass(frozen=True)
class PartitionEstimate:
    N: int
    samples: int
    log_estimate: float
    jackknife_se: float
    acceptance_rate: float
    max_weight_share: float
    p: float
    K: float

    @property
    def is_empty(self) -> bool:
        return self.log_estimate == -math.inf


def estimate_from_log_weights(log_w: np.ndarray, N: int, p: float, K: float) -> PartitionEstimate:
    """Log-mean, delete-one jackknife error and weight diagnostics.

    ``log_w`` holds log(exp(R_p) 1{accepted}) per sample, ``-inf`` when
    rejected.  The reduction runs over the array in sample-index order.
    """
    S = len(log_w)
    accepted = np.isfinite(log_w)
    n_acc = int(np.count_nonzero(accepted))
    if n_acc == 0:
        return PartitionEstimate(N, S, -math.inf, math.inf, 0.0, 1.0, p, K)
    top = float(np.max(log_w[accepted]))
    w = np.where(accepted, np.exp(log_w - top), 0.0)
    total = float(np.sum(w))
    log_est = top + math.log(total / S)
    share = float(np.max(w)) / total
    if S < 2:
        return PartitionEstimate(N, S, log_est, math.inf, n_acc / S, share, p, K)
    rest = total - w
    with np.errstate(divide="ignore"):
        loo = top + np.log(np.clip(rest, 0.0, None) / (S - 1))
    if not np.all(np.isfinite(loo)):
        se = math.inf
    else:
        se = math.sqrt((S - 1) / S * float(np.sum((loo - loo.mean()) ** 2)))
    return PartitionEstimate(N, S, log_est, se, n_acc / S, share, p, K)


# ---------------------------------------------------------------- sampling


@dataclass(frozen=True)
class SampleSet:
    """Per-sample mass and potential energy at one truncation level.

    Holding these lets a whole K grid be evaluated on common random numbers.
    """

    N: int
    p: float
    mass: np.ndarray
    potential: np.ndarray

    def log_weights(self, K: float, exponent_scale: float = 1.0) -> np.ndarray:
        return np.where(self.mass <= K, exponent_scale * self.potential, -np.inf)

    def estimate(self, K: float, exponent_scale: float = 1.0) -> PartitionEstimate:
        if not K > 0:
            raise ValueError(f"K must be positive, got {K}")
        return estimate_from_log_weights(self.log_weights(K, exponent_scale), self.N, self.p, K)


def _observables_chunk(law, grid, stream, p, start, stop):
    c = sample_coefficients(law, grid, stream, start, stop)
    axes = tuple(range(1, grid.d + 1))
    mass = np.sqrt(grid.volume * np.sum(np.abs(c) ** 2, axis=axes))
    return np.stack([mass, batch_lp_power(c, grid, p) / p])


def draw_sample_set(law: FieldLaw, p: float, grid: SpectralGrid, samples: int,
                    stream: SampleStream, workers: int = 1) -> SampleSet:
    if not p > 2:
        raise ValueError(f"p must exceed 2, got {p}")
    if samples < 1:
        raise ValueError("samples must be positive")
    parts = map_chunks(partial(_observables_chunk, law, grid, stream, p), samples, workers)
    obs = concat(parts, axis=1)
    return SampleSet(grid.modes, p, obs[0], obs[1])


def estimate_partition(law: FieldLaw, p: float, K: float, grid: SpectralGrid, samples: int,
                       stream: SampleStream, exponent_scale: float = 1.0, workers: int = 1) -> PartitionEstimate:
    """Estimate Z at the truncation ``grid.modes``.

    ``exponent_scale = 0`` replaces exp(R_p) by 1, so the estimate becomes the
    cutoff acceptance probability (a consistency diagnostic).
    """
    if not K > 0:
        raise ValueError(f"K must be positive, got {K}")
    return draw_sample_set(law, p, grid, samples, stream, workers).estimate(K, exponent_scale)


def _level_stream(stream: SampleStream, N: int) -> SampleStream:
    return stream.child(f"N={N}")


def partition_ladder(law: FieldLaw, p: float, K: float, d: int, ladder: Sequence[int], samples: int,
                     stream: SampleStream, convention: Convention = Convention.TWOPI,
                     workers: int = 1) -> list[PartitionEstimate]:
    """Independent estimates at each truncation of the ladder."""
    out = []
    for N in ladder:
        grid = SpectralGrid(d, N, 1.0, convention)
        out.append(estimate_partition(law, p, K, grid, samples, _level_stream(stream, N), workers=workers))
    return out


# ---------------------------------------------------------------- diagnostics


def _combined(a: PartitionEstimate, b: PartitionEstimate) -> float:
    return math.hypot(a.jackknife_se, b.jackknife_se)


def divergence_diagnostic(estimates: Sequence[PartitionEstimate]) -> Verdict:
    """Classify a truncation ladder.

    Convergent: the top two log-estimates agree within 2 combined standard
    errors and the top level's largest weight carries < 50% of the mean.
    Divergent: the top three levels increase step by step and the top exceeds
    the third by more than 4 combined standard errors, or the top level's
    largest weight carries > 90% of the mean.  Anything else is inconclusive,
    including ladders whose top levels accepted no samples.
    """
    if len(estimates) < 3:
        raise ValueError("a ladder needs at least 3 levels")
    p, K = estimates[0].p, estimates[0].K
    if any(e.p != p or e.K != K for e in estimates):
        raise ValueError("ladder levels have mismatched (p, K)")
    ests = sorted(estimates, key=lambda e: e.N)
    if len({e.N for e in ests}) != len(ests):
        raise ValueError("ladder levels must have distinct truncations")
    a, b, c = ests[-3], ests[-2], ests[-1]
    if c.is_empty or b.is_empty:
        return Verdict.INCONCLUSIVE
    if c.max_weight_share > 0.9:
        return Verdict.DIVERGENT
    if not a.is_empty and a.log_estimate < b.log_estimate < c.log_estimate:
        if c.log_estimate - a.log_estimate > 4 * _combined(a, c):
            return Verdict.DIVERGENT
    if abs(c.log_estimate - b.log_estimate) <= 2 * _combined(b, c) and c.max_weight_share < 0.5:
        return Verdict.CONVERGENT
    return Verdict.INCONCLUSIVE


@dataclass(frozen=True)
class TransitionReport:
    K_grid: tuple[float, ...]
    verdicts: tuple[Verdict, ...]
    estimates: tuple[tuple[PartitionEstimate, ...], ...]
    reference_mass: float
    convention: Convention
    last_convergent: float | None
    first_divergent: float | None
    bracket: str  # "within grid", "above grid", "below grid" or "undetermined"

    @property
    def interval(self) -> tuple[float | None, float | None]:
        return self.last_convergent, self.first_divergent

    def verdict_at(self, K: float) -> Verdict:
        i = int(np.argmin(np.abs(np.asarray(self.K_grid) - K)))
        return self.verdicts[i]


def _bracket(K_grid, verdicts):
    div = [K for K, v in zip(K_grid, verdicts) if v is Verdict.DIVERGENT]
    first_div = min(div) if div else None
    conv = [K for K, v in zip(K_grid, verdicts)
            if v is Verdict.CONVERGENT and (first_div is None or K < first_div)]
    last_conv = max(conv) if conv else None
    if first_div is None and last_conv is None:
        label = "undetermined"
    elif first_div is None:
        label = "above grid"
    elif last_conv is None:
        label = "below grid"
    else:
        label = "within grid"
    return last_conv, first_div, label


def reference_mass(d: int, s: float, convention: Convention) -> float:
    """Critical mass ||Q||_2 in the given convention."""
    profile = solve_ground_state(GnsParameters(d, s, critical_exponent(d, s)))
    return profile.mass_in(convention)


def threshold_scan(d: int, s: float, K_grid: Sequence[float], samples: int, ladder: Sequence[int],
                   stream: SampleStream, convention: Convention = Convention.TWOPI,
                   p: float | None = None, mass: float | None = None,
                   variant: str = "massless_complex", workers: int = 1) -> TransitionReport:
    """Classify every K of the grid at the critical exponent.

    Each ladder level is sampled once and the whole K grid is evaluated on
    those samples (common random numbers), so every level's estimate is
    nondecreasing in K.
    """
    p_crit = critical_exponent(d, s)
    if p is not None and abs(p - p_crit) > 1e-12:
        raise ValueError(f"threshold scans need the critical exponent p = {p_crit:g}, got {p}")
    K_grid = tuple(float(K) for K in K_grid)
    if list(K_grid) != sorted(K_grid) or not K_grid or K_grid[0] <= 0:
        raise ValueError("K grid must be positive and sorted")
    if len(ladder) < 3:
        raise ValueError("a ladder needs at least 3 levels")
    convention = Convention(convention)
    if mass is None:
        mass = reference_mass(d, s, convention)
    law = FieldLaw(s, variant)
    sets = [draw_sample_set(law, p_crit, SpectralGrid(d, N, 1.0, convention), samples,
                            _level_stream(stream, N), workers) for N in ladder]
    estimates = tuple(tuple(ss.estimate(K) for ss in sets) for K in K_grid)
    verdicts = tuple(divergence_diagnostic(e) for e in estimates)
    last_conv, first_div, label = _bracket(K_grid, verdicts)
    return TransitionReport(K_grid, verdicts, estimates, mass, convention, last_conv, first_div, label)
