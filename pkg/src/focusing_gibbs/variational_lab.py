"""Brownian driver, OU smoother and soliton drift for the divergence mechanism.

Per mode, ``Y(n, t) = m(n)^{-s} B_n(t)`` with complex Brownian motions
normalized by ``E|B_n(1)|^2 = 1``.  The smoother solves

    dZ(n, t) = a_n (Y(n, t) - Z(n, t)) dt,  a_n = m(n)^{-s} M^{d/2},

for ``0 < |n| <= M`` and vanishes on the other modes.  The gap
``X = Y - Z`` is an OU process, ``dX = -a X dt + m^{-s} dB``, advanced with the
exact transition over each mesh step.  That needs the pair

    (dB_k, I_k),  I_k = int_{t_k}^{t_{k+1}} exp(-a (t_{k+1} - r)) dB(r),

which is Gaussian with ``E|dB|^2 = dt``, ``E|I|^2 = (1 - e^{-2a dt}) / 2a`` and
``E[I conj(dB)] = (1 - e^{-a dt}) / a``.  Each path stores the increments and
one auxiliary normal per step and mode; ``I_k`` is its regression on ``dB_k``
plus the auxiliary normal times the conditional deviation, which is exact in
law for any single ``M``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial
from typing import Sequence

import numpy as np

from .gns_ground_state import GroundStateProfile, critical_exponent
from .parallel import concat, map_chunks
from .rng import SampleStream
from .spectral_core import (
    Convention,
    SpectralField,
    SpectralGrid,
    batch_lp_power,
    field_from_values,
    l2_norm,
    lp_norm,
    mean,
    sobolev_norm,
)

__all__ = [
    "WienerPath",
    "ZMTrajectory",
    "RateReport",
    "SolitonDrift",
    "DriftObjectiveBreakdown",
    "DivergenceFit",
    "simulate_Y",
    "simulate_paths",
    "simulate_ZM",
    "smoother_rates",
    "x_variance",
    "verify_approx_rates",
    "mollified_indicator",
    "build_soliton_drift",
    "objective_breakdown",
    "divergence_rate_fit",
    "hamiltonian",
]


def _is_dyadic(M: int) -> bool:
    return M >= 1 and int(M) == M and (int(M) & (int(M) - 1)) == 0


# ---------------------------------------------------------------- paths


@dataclass(frozen=True, eq=False)
class WienerPath:
    """A batch of Brownian paths on a uniform mesh of [0, 1].

    ``increments`` and ``auxiliary`` have shape ``(batch, steps) + grid.shape``.
    """

    grid: SpectralGrid
    s: float
    increments: np.ndarray
    auxiliary: np.ndarray

    @property
    def steps(self) -> int:
        return self.increments.shape[1]

    @property
    def dt(self) -> float:
        return 1.0 / self.steps

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.steps + 1)

    def amplitude(self) -> np.ndarray:
        m = self.grid.symbol()
        out = np.zeros_like(m)
        nz = m > 0
        out[nz] = m[nz] ** (-self.s)
        return out

    def brownian(self) -> np.ndarray:
        """B at mesh times, shape (batch, steps + 1) + grid.shape."""
        zero = np.zeros_like(self.increments[:, :1])
        return np.concatenate([zero, np.cumsum(self.increments, axis=1)], axis=1)

    def Y(self) -> np.ndarray:
        return self.brownian() * self.amplitude()

    def Y_final(self) -> np.ndarray:
        return np.sum(self.increments, axis=1) * self.amplitude()


def _complex_normals(gen: np.random.Generator, shape) -> np.ndarray:
    g = gen.standard_normal(tuple(shape) + (2,))
    return (g[..., 0] + 1j * g[..., 1]) * math.sqrt(0.5)


def _draw_path(grid: SpectralGrid, steps: int, gen: np.random.Generator):
    shape = (steps,) + grid.shape
    dB = _complex_normals(gen, shape) * math.sqrt(1.0 / steps)
    aux = _complex_normals(gen, shape)
    return dB, aux


def simulate_Y(grid: SpectralGrid, s: float, time_steps: int, rng: np.random.Generator) -> WienerPath:
    if time_steps < 1:
        raise ValueError("time_steps must be at least 1")
    if not s > grid.d / 2:
        raise ValueError(f"need s > d/2, got s = {s}, d = {grid.d}")
    dB, aux = _draw_path(grid, time_steps, rng)
    return WienerPath(grid, s, dB[None], aux[None])


def simulate_paths(grid: SpectralGrid, s: float, time_steps: int, stream: SampleStream,
                   start: int, stop: int) -> WienerPath:
    """Paths ``start..stop-1`` of a stream, each from its own generator."""
    if not s > grid.d / 2:
        raise ValueError(f"need s > d/2, got s = {s}, d = {grid.d}")
    dBs, auxs = [], []
    for i in range(start, stop):
        dB, aux = _draw_path(grid, time_steps, stream.generator(i))
        dBs.append(dB)
        auxs.append(aux)
    return WienerPath(grid, s, np.stack(dBs), np.stack(auxs))


# ---------------------------------------------------------------- smoother


def smoother_rates(grid: SpectralGrid, s: float, M: int) -> np.ndarray:
    """a_n = m(n)^{-s} M^{d/2} on 0 < |n| <= M, zero elsewhere."""
    m = grid.symbol()
    active = (grid.lattice_norm() > 0) & (grid.lattice_norm() <= M)
    out = np.zeros_like(m)
    out[active] = m[active] ** (-s) * float(M) ** (grid.d / 2)
    return out


def x_variance(grid: SpectralGrid, s: float, M: int, t: float | np.ndarray) -> np.ndarray:
    """E|X_n(t)|^2 per mode (closed form), stacked over ``t`` if it is an array."""
    a = smoother_rates(grid, s, M)
    m = grid.symbol()
    amp2 = np.zeros_like(m)
    amp2[m > 0] = m[m > 0] ** (-2 * s)
    t = np.asarray(t, dtype=float)[..., None] if grid.d == 1 else np.asarray(t, dtype=float).reshape(
        np.shape(t) + (1,) * grid.d)
    with np.errstate(divide="ignore", invalid="ignore"):
        smooth = np.where(a > 0, -np.expm1(-2 * a * t) / np.where(a > 0, 2 * a, 1.0), t)
    return amp2 * smooth


@dataclass(frozen=True, eq=False)
class ZMTrajectory:
    M: int
    path: WienerPath
    X: np.ndarray  # Y - Z at mesh times, (batch, steps + 1) + grid.shape

    @property
    def Z(self) -> np.ndarray:
        return self.path.Y() - self.X

    @property
    def Z_final(self) -> np.ndarray:
        return self.path.Y_final() - self.X[:, -1]

    def velocity(self) -> np.ndarray:
        """Mesh finite differences (Z_{k+1} - Z_k) / dt."""
        return np.diff(self.Z, axis=1) / self.path.dt


def _ou_coefficients(grid: SpectralGrid, s: float, M: int, dt: float):
    a = smoother_rates(grid, s, M)
    act = a > 0
    safe = np.where(act, a, 1.0)
    decay = np.where(act, np.exp(-a * dt), 1.0)
    var_i = np.where(act, -np.expm1(-2 * safe * dt) / (2 * safe), dt)
    cov = np.where(act, -np.expm1(-safe * dt) / safe, dt)
    beta = cov / dt
    resid = np.sqrt(np.clip(var_i - cov * cov / dt, 0.0, None))
    return decay, beta, resid


def simulate_ZM(path: WienerPath, M: int) -> ZMTrajectory:
    grid = path.grid
    if M > grid.modes:
        raise ValueError(f"M = {M} exceeds the grid truncation {grid.modes}")
    if not _is_dyadic(M):
        raise ValueError(f"M must be dyadic, got {M}")
    decay, beta, resid = _ou_coefficients(grid, path.s, M, path.dt)
    amp = path.amplitude()
    X = np.zeros((path.increments.shape[0], path.steps + 1) + grid.shape, dtype=complex)
    for k in range(path.steps):
        forcing = beta * path.increments[:, k] + resid * path.auxiliary[:, k]
        X[:, k + 1] = decay * X[:, k] + amp * forcing
    return ZMTrajectory(M, path, X)


# ---------------------------------------------------------------- rates


@dataclass(frozen=True)
class RateReport:
    s: float
    d: int
    M: tuple[int, ...]
    samples: int
    l2_error: tuple[float, ...]
    l2_stderr: tuple[float, ...]
    l2_exact: tuple[float, ...]
    cost: tuple[float, ...]
    cost_stderr: tuple[float, ...]
    cost_exact: tuple[float, ...]
    l2_slope: float
    cost_slope: float
    l2_target: float
    cost_target: float


def _slope(x, y) -> float:
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


def _smoothed_gap(grid: SpectralGrid, s: float, M: int, steps: int, stream: SampleStream,
                  start: int, stop: int):
    """OU trajectories on the box |n|_inf <= M and the endpoint X(1) on the
    full grid.  Modes beyond the box are never smoothed, so there X(1) = Y(1)
    and one Gaussian per mode (from a separate child stream) suffices."""
    d = grid.d
    traj = simulate_ZM(simulate_paths(grid.with_modes(M), s, steps, stream, start, stop), M)
    X1 = np.zeros((stop - start,) + grid.shape, dtype=complex)
    high = grid.sup_norm() > M
    if high.any():
        m = grid.symbol()[high]
        tail = stream.child("tail")
        for j, i in enumerate(range(start, stop)):
            X1[j][high] = _complex_normals(tail.generator(i), (int(high.sum()),)) * m ** (-s)
    lo = tuple(slice(grid.modes - M, grid.modes + M + 1) for _ in range(d))
    X1[(slice(None),) + lo] = traj.X[:, -1]
    return traj, X1, lo


def _rates_chunk(grid, s, M, steps, stream, start, stop):
    traj, X1, _ = _smoothed_gap(grid, s, M, steps, stream, start, stop)
    err = grid.volume * np.sum(np.abs(X1) ** 2, axis=tuple(range(1, grid.d + 1)))
    small = traj.path.grid
    w = small.symbol() ** (2 * s)
    cost = small.volume * traj.path.dt * np.sum(w * np.abs(traj.velocity()) ** 2,
                                                axis=tuple(range(1, grid.d + 2)))
    return np.stack([err, cost])


def cost_exact(grid: SpectralGrid, s: float, M: int) -> float:
    """int_0^1 E ||D^s dZ/dt||^2 dt for the continuous-time smoother."""
    a = smoother_rates(grid, s, M)
    act = a > 0
    m = grid.symbol()[act]
    aa = a[act]
    per = float(M) ** grid.d * m ** (-2 * s) / (2 * aa) * (1 + np.expm1(-2 * aa) / (2 * aa))
    return grid.volume * float(np.sum(per))


def verify_approx_rates(s: float, d: int, M_ladder: Sequence[int], samples: int, stream: SampleStream,
                        convention: Convention = Convention.PLAIN, time_steps: int = 256,
                        oversample: int = 4, workers: int = 1) -> RateReport:
    """Regress E||Z_M(1) - Y(1)||^2 and the smoothing cost against M.

    Fields are truncated at ``oversample * M`` per level; the regression
    targets are ``-min(s - d/2, d/2)`` and ``max(3d/2 - s, d/2)``.
    """
    M_ladder = [int(M) for M in M_ladder]
    if len(M_ladder) < 4:
        raise ValueError("rate fits need at least 4 values of M")
    if any(not _is_dyadic(M) for M in M_ladder):
        raise ValueError("M values must be dyadic")
    if not s > d / 2:
        raise ValueError(f"need s > d/2, got s = {s}, d = {d}")
    err, err_se, err_ex, cost, cost_se, cost_ex = [], [], [], [], [], []
    for M in M_ladder:
        grid = SpectralGrid(d, oversample * M, 1.0, convention)
        fn = partial(_rates_chunk, grid, s, M, time_steps, stream.child(f"M={M}"))
        chunk = max(1, 2**21 // (time_steps * (2 * M + 1) ** d))
        vals = concat(map_chunks(fn, samples, workers, chunk), axis=1)
        err.append(float(vals[0].mean()))
        err_se.append(float(vals[0].std(ddof=1) / math.sqrt(samples)))
        cost.append(float(vals[1].mean()))
        cost_se.append(float(vals[1].std(ddof=1) / math.sqrt(samples)))
        err_ex.append(grid.volume * float(np.sum(x_variance(grid, s, M, 1.0))))
        cost_ex.append(cost_exact(grid, s, M))
    return RateReport(
        s, d, tuple(M_ladder), samples, tuple(err), tuple(err_se), tuple(err_ex),
        tuple(cost), tuple(cost_se), tuple(cost_ex),
        _slope(M_ladder, err), _slope(M_ladder, cost),
        -min(s - d / 2, d / 2), max(1.5 * d - s, d / 2),
    )


# ---------------------------------------------------------------- soliton drift


def _smooth_step(t: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for t <= 0, 1 for t >= 1.  Its derivative is a bump
    supported in [0, 1] with unit integral."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        f = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        g = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
        return np.where(t <= 0, 0.0, np.where(t >= 1, 1.0, f / (f + g)))


def mollified_indicator(x: np.ndarray, delta: float) -> np.ndarray:
    """1_{[-1/2 + 2 delta, 1/2 - 2 delta]} convolved with a bump of width delta
    centred at 0; equals 1 on |x| <= 1/2 - 5 delta / 2 and 0 beyond
    1/2 - 3 delta / 2."""
    b = 0.5 - 2 * delta
    return _smooth_step((x + b) / delta + 0.5) - _smooth_step((x - b) / delta + 0.5)


def hamiltonian(u: SpectralField, s: float, p: float) -> float:
    return 0.5 * sobolev_norm(u, s) ** 2 - lp_norm(u, p) ** p / p


@dataclass(frozen=True, eq=False)
class SolitonDrift:
    d: int
    s: float
    p: float
    K: float
    rho: float
    alpha: float
    delta: float
    eta: float
    W: SpectralField
    profile_mass: float
    profile_lp_power: float
    energy: float
    lp_power: float
    l2: float
    mean_abs: float

    @property
    def exponent(self) -> float:
        return self.d * self.p / 2 - self.d

    @property
    def A1(self) -> float:
        """-H(W) rho^{dp/2 - d}; positive when item (i) holds."""
        return -self.energy * self.rho**self.exponent

    @property
    def A2(self) -> float:
        return self.lp_power * self.rho**self.exponent

    @property
    def mass_bound_ok(self) -> bool:
        return self.l2 <= (self.K - self.eta) * (1 + 1e-12)


def _core_width(profile: GroundStateProfile, convention: Convention) -> float:
    """Full width at half maximum of Q in the given convention."""
    f = profile.field_in(convention)
    x = f.grid.coordinates(8 * (2 * f.grid.modes + 1))
    v = np.abs(f.evaluate([x]) if f.grid.d == 1 else f.values(len(x)))
    if f.grid.d > 1:
        v = v[(slice(None),) + (len(x) // 2,) * (f.grid.d - 1)]
    above = x[v >= 0.5 * v.max()]
    return float(above.max() - above.min())


def build_soliton_drift(d: int, s: float, p: float, K: float, rho: float, delta: float,
                        profile: GroundStateProfile, grid: SpectralGrid,
                        alpha: float | None = None, eta: float | None = None) -> SolitonDrift:
    """W_rho(x) = alpha rho^{-d/2} phi_delta(x) Q(x / rho) on the grid's torus.

    By default eta = K / 10; alpha = (K - eta) / ||Q||_2 in the critical case
    and min(0.5, (K - eta) / ||Q||_2) in the supercritical case.
    """
    if (d, s, p) != (profile.params.d, profile.params.s, profile.params.p):
        raise ValueError("profile parameters do not match (d, s, p)")
    if grid.box_side != 1.0 or grid.d != d:
        raise ValueError("the drift lives on the unit torus of matching dimension")
    if not (p > 2 and K > 0 and 0 < rho < 1 and 0 < delta < 0.2):
        raise ValueError("need p > 2, K > 0, 0 < rho < 1 and 0 < delta < 0.2")
    p_crit = critical_exponent(d, s)
    q_mass = profile.mass_in(grid.convention)
    critical = abs(p - p_crit) < 1e-12
    if critical and not K > q_mass:
        raise ValueError(f"critical case needs K > ||Q||_2 = {q_mass:.6g}, got {K}")
    if not critical and p < p_crit:
        raise ValueError(f"subcritical p = {p} < {p_crit:g}: no divergent drift")
    eta = K / 10 if eta is None else float(eta)
    if alpha is None:
        alpha = (K - eta) / q_mass if critical else min(0.5, (K - eta) / q_mass)
    if not 0 < eta < K:
        raise ValueError("need 0 < eta < K")
    if alpha * q_mass > (K - eta) * (1 + 1e-12):
        raise ValueError("alpha ||Q||_2 must not exceed K - eta")
    if critical and not alpha > 1:
        raise ValueError("critical case needs alpha > 1 (so H(alpha Q) < 0)")
    width = rho * _core_width(profile, grid.convention)
    if width * (2 * grid.modes + 1) < 8:
        raise ValueError(f"rho = {rho} is under-resolved: fewer than 8 grid points across the core")
    qf = profile.field_in(grid.convention)
    half_box = 0.5 * qf.grid.box_side
    P = 4 * (2 * grid.modes + 1)
    x = grid.coordinates(P)
    inside = np.abs(x / rho) < half_box
    if d == 1:
        q_vals = np.zeros(P, dtype=complex)
        q_vals[inside] = qf.evaluate([x[inside] / rho])
        values = q_vals * mollified_indicator(x, delta)
    else:
        sub = qf.evaluate([x[inside] / rho] * d)
        q_vals = np.zeros((P,) * d, dtype=complex)
        q_vals[np.ix_(*([np.flatnonzero(inside)] * d))] = sub
        phi = mollified_indicator(x, delta)
        values = q_vals * np.prod(np.meshgrid(*([phi] * d), indexing="ij"), axis=0)
    values = alpha * rho ** (-d / 2) * values.real
    W = field_from_values(grid, values, is_real=True)
    lp_power = lp_norm(W, p) ** p
    energy = 0.5 * sobolev_norm(W, s) ** 2 - lp_power / p
    return SolitonDrift(d, s, p, K, rho, float(alpha), delta, eta, W, q_mass,
                        profile.lp ** p * (2 * math.pi) ** (-d if grid.convention is Convention.PLAIN else 0),
                        energy, lp_power, l2_norm(W), abs(mean(W)))


# ---------------------------------------------------------------- objective


@dataclass(frozen=True)
class DriftObjectiveBreakdown:
    rho: float
    M: int
    d: int
    p: float
    samples: int
    A: float
    B: float
    C: float
    D: float
    E: float
    C_se: float
    D_se: float
    E_se: float
    E_kinetic_exact: float
    E_kinetic_mc: float
    E_cross_mc: float
    event_probability: float
    cauchy_schwarz_min_slack: float

    @property
    def total(self) -> float:
        return self.A + self.B + self.C + self.D + self.E

    @property
    def total_se(self) -> float:
        return math.sqrt(self.C_se**2 + self.D_se**2 + self.E_se**2)

    @property
    def terms(self) -> dict:
        return {"A": self.A, "B": self.B, "C": self.C, "D": self.D, "E": self.E}


def _breakdown_chunk(drift: SolitonDrift, M: int, steps: int, stream: SampleStream, start: int, stop: int):
    grid = drift.W.grid
    s, p, d = drift.s, drift.p, drift.d
    traj, X1, lo = _smoothed_gap(grid, s, M, steps, stream, start, stop)
    paths = traj.path
    ou_grid = paths.grid
    w_nz = drift.W.coeffs.copy()
    w_nz[(grid.modes,) * d] = 0.0
    V = X1 + w_nz
    axes = tuple(range(1, d + 1))
    mass = np.sqrt(grid.volume * np.sum(np.abs(V) ** 2, axis=axes))
    rp_v = batch_lp_power(V, grid, p) / p
    # E-term pieces on the smoothed modes
    v = traj.velocity()
    wk = ou_grid.symbol() ** (2 * s)
    W_lo = drift.W.coeffs[lo]
    kin = 0.5 * ou_grid.volume * paths.dt * np.sum(wk * np.abs(v) ** 2, axis=tuple(range(1, d + 2)))
    cross = -ou_grid.volume * paths.dt * np.sum((wk * np.conj(v) * W_lo[None, None]).real, axis=tuple(range(1, d + 2)))
    # discrete Cauchy-Schwarz: ||sum dt (W - v_k)||^2 <= sum dt ||W - v_k||^2
    diff = W_lo[None, None] - v
    lhs = ou_grid.volume * np.sum(wk * np.abs(paths.dt * diff.sum(axis=1)) ** 2, axis=axes)
    rhs = ou_grid.volume * paths.dt * np.sum(wk * np.abs(diff) ** 2, axis=tuple(range(1, d + 2)))
    slack = (rhs - lhs) / np.maximum(rhs, 1e-300)
    return np.stack([mass, rp_v, kin, cross, slack])


def objective_breakdown(drift: SolitonDrift, M: int, samples: int, stream: SampleStream,
                        time_steps: int = 256, workers: int = 1) -> DriftObjectiveBreakdown:
    """Monte Carlo evaluation of the five terms of the drift objective.

    E uses the closed-form smoothing cost plus the Monte Carlo cross term
    -int <dZ/dt, W>_{H^s} dt; the Monte Carlo kinetic part is reported too.
    """
    grid = drift.W.grid
    if M > grid.modes or not _is_dyadic(M):
        raise ValueError(f"M must be dyadic and at most {grid.modes}, got {M}")
    if samples < 2:
        raise ValueError("need at least 2 samples")
    p, s, K = drift.p, drift.s, drift.K
    W = drift.W
    w_nz = SpectralField(grid, np.where(grid.sup_norm() > 0, W.coeffs, 0), True)
    rp_w = lp_norm(W, p) ** p / p
    rp_wnz = lp_norm(w_nz, p) ** p / p
    A = drift.energy
    Bterm = rp_w - rp_wnz
    chunk = max(1, 2**21 // (time_steps * (2 * M + 1) ** drift.d))
    fn = partial(_breakdown_chunk, drift, M, time_steps, stream)
    mass, rp_v, kin, cross, slack = concat(map_chunks(fn, samples, workers, chunk), axis=1)
    inside = mass <= K
    c_vals = np.where(inside, rp_wnz - rp_v, 0.0)
    d_vals = np.where(inside, 0.0, rp_wnz)
    sq = math.sqrt(samples)
    kin_exact = 0.5 * cost_exact(grid.with_modes(M), s, M)
    E = kin_exact + float(cross.mean())
    return DriftObjectiveBreakdown(
        rho=drift.rho, M=M, d=drift.d, p=p, samples=samples,
        A=A, B=Bterm, C=float(c_vals.mean()), D=float(d_vals.mean()), E=E,
        C_se=float(c_vals.std(ddof=1)) / sq, D_se=float(d_vals.std(ddof=1)) / sq,
        E_se=float(cross.std(ddof=1)) / sq,
        E_kinetic_exact=kin_exact, E_kinetic_mc=float(kin.mean()), E_cross_mc=float(cross.mean()),
        event_probability=float(np.mean(~inside)), cauchy_schwarz_min_slack=float(slack.min()),
    )


@dataclass(frozen=True)
class DivergenceFit:
    slope: float
    intercept: float
    target: float
    rhos: tuple[float, ...]
    totals: tuple[float, ...]

    @property
    def relative_error(self) -> float:
        return abs(self.slope - self.target) / self.target


def divergence_rate_fit(breakdowns: Sequence[DriftObjectiveBreakdown]) -> DivergenceFit:
    """Least-squares slope of log(-total) against log(1/rho)."""
    if len(breakdowns) < 4:
        raise ValueError("a rate fit needs at least 4 values of rho")
    d, p = breakdowns[0].d, breakdowns[0].p
    rhos = np.array([b.rho for b in breakdowns])
    totals = np.array([b.total for b in breakdowns])
    bad = [f"rho={r:g}: total={t:.6g}" for r, t in zip(rhos, totals) if not t < 0]
    if bad:
        raise ValueError("fit refused, non-negative totals: " + "; ".join(bad))
    slope, intercept = np.polyfit(np.log(1 / rhos), np.log(-totals), 1)
    return DivergenceFit(float(slope), float(intercept), d * p / 2 - d, tuple(rhos), tuple(totals))
