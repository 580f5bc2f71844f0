"""Fractional Gagliardo-Nirenberg-Sobolev optimizers on a large periodic box.

The Weinstein functional

    J(u) = ||u||_{H^s}^{a} ||u||_{L^2}^{b} / ||u||_{L^p}^p,
    a = (p-2) d / (2s),  b = 2 + (p-2)(2s-d)/(2s),

is invariant under amplitude scaling and dilation; its infimum is
``1 / C_GNS``.  A minimizer rescaled so that ``||Q||_2 = ||Q||_{H^s}`` and
``||Q||_{H^s}^2 = (2/p) ||Q||_p^p`` solves

    a D^{2s} Q + b Q = 2 |Q|^{p-2} Q,

and then ``C_GNS = (p/2) ||Q||_2^{2-p}``.  The same minimizer rescaled to
``D^{2s} Q + Q = |Q|^{p-2} Q`` is kept as the standard profile.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .spectral_core import (
    Convention,
    SpectralField,
    SpectralGrid,
    field_from_function,
    from_real_space,
    l2_norm,
    quadrature_size,
    sobolev_norm,
    to_real_space,
)

__all__ = [
    "GnsParameters",
    "SolverSettings",
    "GroundStateProfile",
    "critical_exponent",
    "weinstein_functional",
    "solve_ground_state",
    "normalize_profile",
    "elliptic_residual",
    "sharp_constant",
    "default_box",
    "localized_test_field",
]


def critical_exponent(d: int, s: float) -> float:
    return 4.0 * s / d + 2.0


@dataclass(frozen=True)
class GnsParameters:
    d: int
    s: float
    p: float

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ValueError(f"d must be 1, 2 or 3, got {self.d}")
        if not self.s > 0:
            raise ValueError(f"s must be positive, got {self.s}")
        if not self.admissible:
            bound = "p > 2" if self.d < 2 * self.s else f"2 < p <= {2 * self.d / (self.d - 2 * self.s):g}"
            raise ValueError(f"inadmissible exponent p = {self.p}: need {bound}")

    @property
    def admissible(self) -> bool:
        if not self.p > 2:
            return False
        if self.d < 2 * self.s:
            return True
        if self.d == 2 * self.s:
            return True  # every finite p > 2
        return self.p <= 2 * self.d / (self.d - 2 * self.s)

    @property
    def kinetic_exponent(self) -> float:
        return (self.p - 2) * self.d / (2 * self.s)

    @property
    def mass_exponent(self) -> float:
        return 2 + (self.p - 2) * (2 * self.s - self.d) / (2 * self.s)

    @property
    def is_critical(self) -> bool:
        return abs(self.p - critical_exponent(self.d, self.s)) < 1e-12


@dataclass(frozen=True)
class SolverSettings:
    flow_step: float = 1.0
    max_iter: int = 20000
    tol: float = 1e-9
    residual_tol: float = 1e-6


def default_box(d: int) -> SpectralGrid:
    modes = {1: 512, 2: 96, 3: 24}[d]
    side = {1: 64.0, 2: 40.0, 3: 24.0}[d]
    return SpectralGrid(d, modes, side, Convention.TWOPI)


# ---------------------------------------------------------------- functionals


def _power_nonlinearity(vals: np.ndarray, p: float) -> np.ndarray:
    a = np.abs(vals)
    if float(p).is_integer() and int(p) % 2 == 0:
        return vals * a ** int(p - 2)
    return vals * a ** (p - 2)


def _norms(coeffs: np.ndarray, grid: SpectralGrid, s: float, p: float):
    """(kinetic K, mass M, potential P, |u|^{p-2}u projected, values)."""
    m2s = grid.symbol() ** (2 * s)
    power = np.abs(coeffs) ** 2
    K = grid.volume * float(np.sum(m2s * power))
    M = grid.volume * float(np.sum(power))
    Pq = quadrature_size(grid.modes, p)
    vals = to_real_space(coeffs, grid, Pq)
    if np.all(np.abs(vals.imag) <= 1e-13 * max(1.0, float(np.max(np.abs(vals.real))))):
        vals = vals.real
    P = float(np.sum(np.abs(vals) ** p)) * grid.volume / Pq**grid.d
    return K, M, P, vals


def weinstein_functional(u: SpectralField, params: GnsParameters) -> float:
    K, M, P, _ = _norms(u.coeffs, u.grid, params.s, params.p)
    if M == 0:
        raise ValueError("the Weinstein functional is undefined at the zero field")
    if P == 0:
        return math.inf
    a, b = params.kinetic_exponent, params.mass_exponent
    return math.exp(0.5 * a * math.log(K) + 0.5 * b * math.log(M) - math.log(P))


def _log_j(coeffs, grid, params):
    K, M, P, vals = _norms(coeffs, grid, params.s, params.p)
    a, b = params.kinetic_exponent, params.mass_exponent
    return 0.5 * a * math.log(K) + 0.5 * b * math.log(M) - math.log(P), (K, M, P, vals)


def _gradient(coeffs, grid, params, state):
    """L^2 gradient of log J in coefficient form."""
    K, M, P, vals = state
    a, b, p = params.kinetic_exponent, params.mass_exponent, params.p
    nonlin = from_real_space(_power_nonlinearity(vals, p), grid)
    m2s = grid.symbol() ** (2 * params.s)
    return a * m2s * coeffs / K + b * coeffs / M - p * nonlin / P


def _symmetrize(coeffs: np.ndarray, d: int) -> np.ndarray:
    flipped = np.conj(coeffs[(slice(None, None, -1),) * d])
    return 0.5 * (coeffs + flipped)


# ---------------------------------------------------------------- profiles


@dataclass(frozen=True, eq=False)
class GroundStateProfile:
    params: GnsParameters
    field: SpectralField
    standard_field: SpectralField
    raw_field: SpectralField
    l2: float
    hs: float
    lp: float
    c_gns: float
    residual: float
    gradient_norm: float
    iterations: int
    converged: bool
    normalized: bool = True

    @property
    def mass(self) -> float:
        return self.l2

    def mass_in(self, convention: Convention) -> float:
        """||Q||_2 for the symbol convention in which the profile is used.

        A TwoPi profile on a box of side L has the same coefficients as a Plain
        profile on a box of side L / 2 pi, whose norms carry (2 pi)^{-d}.
        """
        if Convention(convention) is self.field.grid.convention:
            return self.l2
        return self.l2 * (2 * math.pi) ** (-self.params.d / 2)

    def field_in(self, convention: Convention) -> SpectralField:
        conv = Convention(convention)
        g = self.field.grid
        if conv is g.convention:
            return self.field
        side = g.box_side / (2 * math.pi) if conv is Convention.PLAIN else g.box_side * 2 * math.pi
        return SpectralField(g.with_box(side, conv), self.field.coeffs, self.field.is_real)

    def sharp_constant_in(self, convention: Convention) -> float:
        return 0.5 * self.params.p * self.mass_in(convention) ** (2 - self.params.p)

    def coordinates(self) -> np.ndarray:
        g = self.field.grid
        return g.coordinates(2 * g.modes + 2)


def _rescale(coeffs: np.ndarray, grid: SpectralGrid, params: GnsParameters, target: str):
    """Amplitude-dilation rescaling of a minimizer.

    ``target='balanced'`` gives ||Q||_2 = ||Q||_H and ||Q||_H^2 = (2/p)||Q||_p^p;
    ``target='standard'`` gives the solution of D^{2s}Q + Q = |Q|^{p-2}Q.
    """
    K, M, P, _ = _norms(coeffs, grid, params.s, params.p)
    d, s, p = params.d, params.s, params.p
    a, b = params.kinetic_exponent, params.mass_exponent
    ratio = 1.0 if target == "balanced" else a / b
    # dilation by beta multiplies K/M by beta^{-2s}; a new box side realises it
    beta = (K / (M * ratio)) ** (1 / (2 * s))
    new_grid = grid.with_box(grid.box_side * beta)
    K1, P1 = K * beta ** (d - 2 * s), P * beta**d
    # amplitude: K = (2/p) P for the balanced form, K + M = P for the standard one
    factor = 0.5 * p if target == "balanced" else p / a
    c = (factor * K1 / P1) ** (1 / (p - 2))
    return SpectralField(new_grid, c * coeffs, True)


def normalize_profile(u: SpectralField, params: GnsParameters, iterations: int = 0,
                      gradient_norm: float = math.nan, converged: bool = False) -> GroundStateProfile:
    """Rescale any nonzero real field as if it were a minimizer and package it."""
    if u.grid.convention is not Convention.TWOPI:
        raise ValueError("ground states are computed under the TwoPi convention")
    coeffs = _symmetrize(np.asarray(u.coeffs), u.grid.d)
    balanced = _rescale(coeffs, u.grid, params, "balanced")
    standard = _rescale(coeffs, u.grid, params, "standard")
    l2 = l2_norm(balanced)
    hs = sobolev_norm(balanced, params.s)
    K, M, P, _ = _norms(balanced.coeffs, balanced.grid, params.s, params.p)
    profile = GroundStateProfile(
        params=params,
        field=balanced,
        standard_field=standard,
        raw_field=SpectralField(u.grid, coeffs, True),
        l2=l2,
        hs=hs,
        lp=P ** (1 / params.p),
        c_gns=0.5 * params.p * l2 ** (2 - params.p),
        residual=math.nan,
        gradient_norm=gradient_norm,
        iterations=iterations,
        converged=False,
    )
    res = elliptic_residual(profile)
    return replace(profile, residual=res, converged=bool(converged))


def _check_normalized(profile: GroundStateProfile, tol: float = 1e-8):
    K, M, P, _ = _norms(profile.field.coeffs, profile.field.grid, profile.params.s, profile.params.p)
    ok = abs(K - M) <= tol * M and abs(K - 2 * P / profile.params.p) <= tol * K
    if not (profile.normalized and ok):
        raise ValueError("profile is not normalized (need ||Q||_2 = ||Q||_H and ||Q||_H^2 = (2/p)||Q||_p^p)")


def elliptic_residual(profile: GroundStateProfile) -> float:
    """|| (p-2)d D^{2s}Q + (4s + (p-2)(2s-d))Q - 4s|Q|^{p-2}Q ||_2 / ||Q||_2.

    The nonlinear term is evaluated on the oversampled real-space grid, so the
    part of |Q|^{p-2}Q above the band limit counts towards the residual.
    """
    _check_normalized(profile)
    params = profile.params
    d, s, p = params.d, params.s, params.p
    u = profile.field
    g = u.grid
    Pq = quadrature_size(g.modes, p)
    linear = (p - 2) * d * g.symbol() ** (2 * s) * u.coeffs + (4 * s + (p - 2) * (2 * s - d)) * u.coeffs
    lin_vals = to_real_space(linear, g, Pq)
    q_vals = to_real_space(u.coeffs, g, Pq)
    r = lin_vals - 4 * s * _power_nonlinearity(q_vals, p)
    norm = math.sqrt(float(np.sum(np.abs(r) ** 2)) * g.volume / Pq**d)
    return norm / l2_norm(u)


def sharp_constant(profile: GroundStateProfile) -> float:
    _check_normalized(profile, 1e-6)
    return 0.5 * profile.params.p * l2_norm(profile.field) ** (2 - profile.params.p)


# ---------------------------------------------------------------- solver


def localized_test_field(grid: SpectralGrid, gen: np.random.Generator, max_bumps: int = 4) -> SpectralField:
    """A random sum of modulated Gaussian packets well inside the box.

    Centres lie within an eighth of the side from the origin and widths in
    [0.3, 3], so the field is negligible at the box edge and behaves like a
    function on R^d; it is then projected onto the grid's band.
    """
    L = grid.box_side
    bumps = int(gen.integers(1, max_bumps + 1))
    amp = gen.standard_normal(bumps) + 1j * gen.standard_normal(bumps)
    centre = gen.uniform(-L / 8, L / 8, size=(bumps, grid.d))
    width = gen.uniform(0.3, 3.0, size=bumps)
    freq = gen.uniform(-2.0, 2.0, size=(bumps, grid.d))

    def f(*x):
        out = 0
        for j in range(bumps):
            r2 = sum((xi - centre[j, k]) ** 2 for k, xi in enumerate(x))
            phase = sum(freq[j, k] * xi for k, xi in enumerate(x))
            out = out + amp[j] * np.exp(-0.5 * r2 / width[j] ** 2 + 1j * phase)
        return out

    return field_from_function(grid, f)


def gaussian_initial(grid: SpectralGrid) -> SpectralField:
    return field_from_function(grid, lambda *x: np.exp(-0.5 * sum(xi * xi for xi in x)))


def _inner(a: np.ndarray, b: np.ndarray, volume: float) -> float:
    return volume * float(np.sum((np.conj(a) * b).real))


def solve_ground_state(params: GnsParameters, solver: SolverSettings | None = None,
                       grid: SpectralGrid | None = None, initial: SpectralField | None = None,
                       memory: int = 12) -> GroundStateProfile:
    """Minimize J by a preconditioned quasi-Newton flow on log J at fixed mass.

    Directions come from the L-BFGS two-loop recursion whose base metric is
    the spectral filter ``M (1 + m^{2s} M/K)^{-1}``; every step passes an
    Armijo test on log J and is followed by renormalization of the mass (the
    gradient is L^2-orthogonal to u, so this only removes second-order drift).
    Iteration stops when ``||grad log J||_2 ||u||_2 < tol``, i.e. the gradient
    of J is below ``tol * J`` in the mass-normalized metric.
    """
    solver = solver or SolverSettings()
    if grid is None:
        grid = default_box(params.d)
    if grid.convention is not Convention.TWOPI:
        raise ValueError("ground states are computed under the TwoPi convention")
    u0 = gaussian_initial(grid) if initial is None else initial
    if u0.grid != grid:
        raise ValueError("initial field must live on the solver grid")
    vol = grid.volume
    c = _symmetrize(np.array(u0.coeffs), grid.d)
    mass0 = math.sqrt(vol * float(np.sum(np.abs(c) ** 2)))
    if mass0 == 0:
        raise ValueError("initial field is zero")
    m2s = grid.symbol() ** (2 * params.s)

    f, state = _log_j(c, grid, params)
    g = _gradient(c, grid, params, state)
    history: list[tuple[np.ndarray, np.ndarray, float]] = []
    it = 0
    gnorm = math.inf
    while True:
        K, M, _, _ = state
        gnorm = math.sqrt(_inner(g, g, vol) * M)
        if gnorm < solver.tol or it >= solver.max_iter:
            break
        precond = M / (1.0 + m2s * (M / K))
        q = g.copy()
        alphas = []
        for s_k, y_k, rho in reversed(history):
            a_k = rho * _inner(s_k, q, vol)
            alphas.append(a_k)
            q -= a_k * y_k
        r = precond * q
        if history:
            s_k, y_k, _ = history[-1]
            base = precond * y_k
            r *= _inner(s_k, y_k, vol) / _inner(y_k, base, vol)
        for (s_k, y_k, rho), a_k in zip(history, reversed(alphas)):
            b_k = rho * _inner(y_k, r, vol)
            r += (a_k - b_k) * s_k
        direction = -r
        slope = _inner(g, direction, vol)
        if not slope < 0:
            history.clear()
            direction = -precond * g
            slope = _inner(g, direction, vol)
        step = solver.flow_step
        accepted = False
        for _ in range(50):
            trial = c + step * direction
            f_new, state_new = _log_j(trial, grid, params)
            if f_new <= f + 1e-4 * step * slope:
                accepted = True
                break
            step *= 0.5
        it += 1
        if not accepted:
            break
        c_new = _symmetrize(trial * (mass0 / math.sqrt(state_new[1])), grid.d)
        f, state = _log_j(c_new, grid, params)
        g_new = _gradient(c_new, grid, params, state)
        s_k, y_k = c_new - c, g_new - g
        curv = _inner(s_k, y_k, vol)
        if curv > 1e-14 * math.sqrt(_inner(s_k, s_k, vol) * _inner(y_k, y_k, vol)):
            history.append((s_k, y_k, 1.0 / curv))
            if len(history) > memory:
                history.pop(0)
        c, g = c_new, g_new
    profile = normalize_profile(SpectralField(grid, c, True), params, iterations=it, gradient_norm=gnorm)
    ok = gnorm < solver.tol and profile.residual < solver.residual_tol
    return replace(profile, converged=bool(ok))
