import math
import time

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, optimize

from focusing_gibbs.gns_ground_state import (
    GnsParameters,
    SolverSettings,
    critical_exponent,
    default_box,
    elliptic_residual,
    localized_test_field,
    normalize_profile,
    sharp_constant,
    solve_ground_state,
    weinstein_functional,
)
from focusing_gibbs.spectral_core import Convention, SpectralField, SpectralGrid, field_from_function

from conftest import ground_state


def sech(t):
    e = np.exp(-np.abs(t))
    return 2 * e / (1 + e * e)


def sech_soliton(p):
    # Q'' - Q + Q^{p-1} = 0 on R
    return lambda x: (0.5 * p * sech(0.5 * (p - 2) * x) ** 2) ** (1 / (p - 2))


def profile_error(profile, exact):
    """Relative L^2 error of the standard profile after best-fit amplitude and
    dilation (the solver fixes neither exactly, only up to J's symmetries)."""
    u = profile.standard_field
    x = u.grid.coordinates(4 * u.grid.modes)
    vals = u.values(4 * u.grid.modes).real

    def err(params):
        amp, scale = params
        return float(np.sum((vals - amp * exact(scale * x)) ** 2))

    res = optimize.minimize(err, [1.0, 1.0], method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-30})
    return math.sqrt(res.fun / float(np.sum(vals**2))), res.x


class TestParameters:
    def test_critical_exponent(self):
        assert critical_exponent(1, 1.0) == 6.0
        assert critical_exponent(2, 1.0) == 4.0

    @pytest.mark.parametrize("d,s,p", [(1, 1.0, 2.0), (1, 1.0, 1.5), (3, 0.5, 3.5)])
    def test_inadmissible(self, d, s, p):
        with pytest.raises(ValueError, match="inadmissible"):
            GnsParameters(d, s, p)

    def test_endpoint_admissible(self):
        assert GnsParameters(3, 0.5, 3.0).admissible

    def test_exponents(self):
        par = GnsParameters(1, 1.0, 6.0)
        assert par.kinetic_exponent == 2.0 and par.mass_exponent == 4.0 and par.is_critical


class TestSolitonOracles:
    @pytest.mark.parametrize("p", [4.0, 6.0, 8.0])
    def test_matches_sech_family(self, p):
        profile = ground_state(1, 1.0, p)
        err, (amp, scale) = profile_error(profile, sech_soliton(p))
        assert err < 1e-3
        assert amp == pytest.approx(1.0, abs=1e-3) and scale == pytest.approx(1.0, abs=1e-3)

    @pytest.mark.parametrize("p", [4.0, 6.0, 8.0])
    def test_residual_and_convergence(self, p):
        profile = ground_state(1, 1.0, p)
        assert profile.converged
        assert profile.residual < 1e-6

    def test_runtime(self):
        t0 = time.perf_counter()
        solve_ground_state(GnsParameters(1, 1.0, 6.0))
        assert time.perf_counter() - t0 < 60

    def test_sharp_constant_identity(self, quintic):
        assert sharp_constant(quintic) * weinstein_functional(quintic.field, quintic.params) == pytest.approx(1.0, abs=1e-8)

    def test_weinstein_of_closed_form_profile(self):
        par = GnsParameters(1, 1.0, 6.0)
        f = sech_soliton(6.0)
        df = lambda x: -0.5 * 3 ** 0.25 * 2 * np.tanh(2 * x) * sech(2 * x) ** 0.5
        kin = 2 * integrate.quad(lambda x: df(x) ** 2, 0, np.inf, epsabs=1e-14)[0]
        mass = 2 * integrate.quad(lambda x: f(x) ** 2, 0, np.inf, epsabs=1e-14)[0]
        pot = 2 * integrate.quad(lambda x: f(x) ** 6, 0, np.inf, epsabs=1e-14)[0]
        # TwoPi symbol: the H^1 seminorm is int |u'|^2
        u = field_from_function(default_box(1), f)
        assert weinstein_functional(u, par) == pytest.approx(kin * mass**2 / pot, rel=1e-8)

    def test_normalization(self, quintic):
        assert quintic.l2 == pytest.approx(quintic.hs, rel=1e-8)
        assert quintic.hs**2 == pytest.approx(2 / 6 * quintic.lp**6, rel=1e-8)

    def test_plain_convention_constants(self, quintic):
        assert quintic.mass_in(Convention.PLAIN) == pytest.approx(quintic.mass / math.sqrt(2 * math.pi), rel=1e-14)
        q = quintic.field_in(Convention.PLAIN)
        assert q.grid.box_side == pytest.approx(quintic.field.grid.box_side / (2 * math.pi))
        c = quintic.sharp_constant_in(Convention.PLAIN)
        assert c * weinstein_functional(q, quintic.params) == pytest.approx(1.0, abs=1e-8)


class TestMinimizer:
    def test_positive(self, quintic):
        vals = quintic.field.values().real
        assert np.min(vals) > -1e-10 * np.max(vals)

    def test_restart_is_fixed_point(self, cubic):
        again = solve_ground_state(cubic.params, initial=cubic.raw_field)
        assert again.iterations <= 5
        assert again.c_gns == pytest.approx(cubic.c_gns, rel=1e-10)

    def test_perturbation_breaks_residual(self, quintic):
        g = quintic.raw_field.grid
        bump = field_from_function(g, lambda x: 0.05 * np.exp(-((x - 1.0) ** 2)))
        perturbed = normalize_profile(quintic.raw_field + bump, quintic.params)
        assert perturbed.residual > 1e-2

    def test_translation_invariance(self, quintic):
        par = quintic.params
        assert weinstein_functional(quintic.field.translate([3.7]), par) == pytest.approx(
            weinstein_functional(quintic.field, par), rel=1e-12)

    def test_box_independence(self, quintic):
        other = solve_ground_state(quintic.params, grid=SpectralGrid(1, 384, 48.0, Convention.TWOPI))
        assert other.converged
        assert other.c_gns == pytest.approx(quintic.c_gns, rel=1e-7)

    def test_mildly_superquadratic(self):
        profile = solve_ground_state(GnsParameters(1, 1.0, 2.5))
        assert profile.residual < 1e-6
        assert profile.c_gns * weinstein_functional(profile.field, profile.params) == pytest.approx(1.0, abs=1e-8)

    def test_rejects_plain_grid(self):
        with pytest.raises(ValueError):
            solve_ground_state(GnsParameters(1, 1.0, 4.0), grid=SpectralGrid(1, 64, 32.0, Convention.PLAIN))


class TestWeinstein:
    @given(st.integers(0, 2**32), st.floats(0.1, 10.0), st.floats(0.5, 2.0))
    def test_amplitude_and_dilation_invariance(self, seed, amp, dilation):
        par = GnsParameters(1, 1.0, 6.0)
        g = SpectralGrid(1, 64, 16.0)
        u = localized_test_field(g, np.random.default_rng(seed))
        stretched = SpectralField(g.with_box(16.0 * dilation), u.coeffs)
        base = weinstein_functional(u, par)
        assert weinstein_functional(u * amp, par) == pytest.approx(base, rel=1e-10)
        assert weinstein_functional(stretched, par) == pytest.approx(base, rel=1e-10)

    @given(st.integers(0, 2**32))
    def test_gns_inequality_on_localized_fields(self, seed):
        profile = ground_state(1, 1.0, 6.0)
        u = localized_test_field(profile.field.grid, np.random.default_rng(seed))
        assert profile.c_gns * weinstein_functional(u, profile.params) >= 1 - 1e-6

    def test_zero_field(self):
        with pytest.raises(ValueError):
            weinstein_functional(SpectralField.zeros(SpectralGrid(1, 8)), GnsParameters(1, 1.0, 4.0))

    def test_unnormalized_profile_rejected(self, quintic):
        from dataclasses import replace
        bad = replace(quintic, normalized=False)
        with pytest.raises(ValueError, match="not normalized"):
            elliptic_residual(bad)


def test_default_solver_settings():
    s = SolverSettings()
    assert s.tol > 0 and s.residual_tol == 1e-6
