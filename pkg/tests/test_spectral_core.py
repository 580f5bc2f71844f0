import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from focusing_gibbs.spectral_core import (
    Convention,
    HighPass,
    LowPass,
    NonZeroModes,
    SpectralField,
    SpectralGrid,
    ZeroModeOnly,
    apply_fractional_derivative,
    field_from_function,
    from_real_space,
    inverse_fractional_derivative,
    l2_norm,
    lp_norm,
    mean,
    project,
    quadrature_size,
    sobolev_norm,
    to_real_space,
)

from conftest import random_field

grids = st.builds(
    SpectralGrid,
    d=st.integers(1, 3),
    modes=st.integers(1, 5),
    box_side=st.sampled_from([1.0, 2.5, 8.0]),
    convention=st.sampled_from(list(Convention)),
)


class TestGrid:
    def test_rejects_bad_parameters(self):
        with pytest.raises(ValueError):
            SpectralGrid(4, 8)
        with pytest.raises(ValueError):
            SpectralGrid(1, 0)
        with pytest.raises(ValueError):
            SpectralGrid(1, 4, box_side=-1.0)

    @pytest.mark.parametrize("N,p", [(8, 2), (8, 6), (64, 8), (5, 3)])
    def test_quadrature_size(self, N, p):
        P = quadrature_size(N, p)
        assert P >= max(2 * N + 2, math.ceil(p / 2) * (2 * N + 1))
        assert P & (P - 1) == 0

    def test_symbol_conventions(self):
        g = SpectralGrid(1, 3, 2.0, Convention.TWOPI)
        assert np.allclose(g.symbol(), 2 * np.pi * np.abs(np.arange(-3, 4)) / 2.0)
        assert np.allclose(g.with_box(2.0, Convention.PLAIN).symbol(), np.abs(np.arange(-3, 4)) / 2.0)


class TestDerivative:
    def test_single_mode_twopi(self):
        g = SpectralGrid(1, 4)
        u = SpectralField.single_mode(g, (1,), 1.0)
        du = apply_fractional_derivative(u, 1.0)
        assert du.coeffs[g.modes + 1] == pytest.approx(2 * np.pi, rel=1e-15)

    def test_constant_annihilated(self):
        u = SpectralField.constant(SpectralGrid(2, 3), 1.7)
        assert np.all(apply_fractional_derivative(u, 0.3).coeffs == 0)

    def test_negative_order_rejected(self):
        with pytest.raises(ValueError):
            apply_fractional_derivative(SpectralField.zeros(SpectralGrid(1, 2)), -0.5)

    def test_half_twice_is_one(self):
        u = random_field(SpectralGrid(2, 6), 1)
        twice = apply_fractional_derivative(apply_fractional_derivative(u, 0.5), 0.5)
        once = apply_fractional_derivative(u, 1.0)
        assert np.allclose(twice.coeffs, once.coeffs, rtol=1e-12, atol=0)

    @given(grids, st.floats(0.0, 2.0), st.floats(0.0, 2.0), st.integers(0, 2**16))
    def test_semigroup(self, grid, s, t, seed):
        u = random_field(grid, seed)
        lhs = apply_fractional_derivative(apply_fractional_derivative(u, s), t)
        rhs = apply_fractional_derivative(u, s + t)
        nz = grid.sup_norm() > 0
        assert np.allclose(lhs.coeffs[nz], rhs.coeffs[nz], rtol=1e-12, atol=0)

    @given(grids, st.floats(0.1, 2.0), st.integers(0, 2**16))
    def test_inverse_on_nonzero_modes(self, grid, s, seed):
        u = project(random_field(grid, seed), NonZeroModes())
        back = inverse_fractional_derivative(apply_fractional_derivative(u, s), s)
        assert np.allclose(back.coeffs, u.coeffs, rtol=1e-12, atol=1e-14)


class TestNorms:
    def test_single_mode_plain(self):
        g = SpectralGrid(2, 3, 1.0, Convention.PLAIN)
        u = SpectralField.single_mode(g, (1, 0), 0.7 - 0.2j)
        for s in (0.3, 1.0, 2.5):
            assert sobolev_norm(u, s) == pytest.approx(abs(0.7 - 0.2j), rel=1e-14)

    def test_constant(self):
        g = SpectralGrid(2, 4, 3.0)
        u = SpectralField.constant(g, 2.0)
        assert sobolev_norm(u, 1.0) == 0.0
        for p in (1.0, 3.0, 4.0, 7.5):
            assert lp_norm(u, p) == pytest.approx(2.0 * 3.0 ** (2 / p), rel=1e-12)

    def test_sobolev_direct_sum(self):
        g = SpectralGrid(2, 5, 2.0, Convention.TWOPI)
        u = random_field(g, 3)
        total = 0.0
        for i in range(-5, 6):
            for j in range(-5, 6):
                if i == 0 and j == 0:
                    continue
                m = 2 * math.pi * math.hypot(i, j) / 2.0
                total += m ** 1.4 * abs(u.coeffs[i + 5, j + 5]) ** 2
        assert sobolev_norm(u, 0.7) == pytest.approx(math.sqrt(4.0 * total), rel=1e-12)

    def test_l4_cosine_against_adaptive_quadrature(self):
        g = SpectralGrid(1, 3)
        a = 0.8
        u = SpectralField(g, np.array([0, 0, a, 0, a, 0, 0], dtype=complex), True)
        ref = integrate.quad(lambda x: (2 * a * np.cos(2 * np.pi * x)) ** 4, -0.5, 0.5, epsabs=1e-14)[0]
        assert ref == pytest.approx(1.5 * (2 * a) ** 4 / 4, rel=1e-12)
        assert lp_norm(u, 4) ** 4 == pytest.approx(ref, rel=1e-12)

    def test_single_exponential_l4(self):
        u = SpectralField.single_mode(SpectralGrid(1, 4), (1,), 0.5)
        assert lp_norm(u, 4) == pytest.approx(0.5, rel=1e-13)

    def test_lp_rejects_small_p(self):
        with pytest.raises(ValueError):
            lp_norm(SpectralField.zeros(SpectralGrid(1, 2)), 0.5)

    def test_zero_field(self):
        u = SpectralField.zeros(SpectralGrid(3, 2))
        assert l2_norm(u) == sobolev_norm(u, 1.0) == lp_norm(u, 3.0) == lp_norm(u, math.inf) == 0.0

    @given(grids, st.integers(0, 2**16))
    def test_parseval(self, grid, seed):
        u = random_field(grid, seed)
        P = grid.quadrature_points()
        vals = u.values(P)
        quad = grid.volume * float(np.mean(np.abs(vals) ** 2))
        assert quad == pytest.approx(l2_norm(u) ** 2, rel=1e-10)
        assert lp_norm(u, 2) == l2_norm(u)

    @given(grids, st.integers(0, 2**16))
    def test_h0_is_centred_l2(self, grid, seed):
        u = random_field(grid, seed)
        centred = u - SpectralField.constant(grid, mean(u))
        assert sobolev_norm(u, 0.0) == pytest.approx(lp_norm(centred, 2), rel=1e-12)

    @given(grids, st.integers(0, 2**16), st.floats(-3, 3))
    def test_translation_invariance(self, grid, seed, shift):
        u = random_field(grid, seed)
        v = u.translate([shift] * grid.d)
        assert sobolev_norm(v, 0.8) == pytest.approx(sobolev_norm(u, 0.8), rel=1e-12)
        assert lp_norm(v, 4) == pytest.approx(lp_norm(u, 4), rel=1e-10)

    def test_sup_norm_of_cosine(self):
        g = SpectralGrid(1, 2)
        u = SpectralField(g, np.array([0, 0.5, 0, 0.5, 0], dtype=complex), True)
        assert lp_norm(u, math.inf) == pytest.approx(1.0, rel=1e-12)


class TestTransforms:
    @given(grids, st.integers(0, 2**16))
    def test_round_trip(self, grid, seed):
        u = random_field(grid, seed)
        vals = to_real_space(u.coeffs, grid, grid.quadrature_points(5))
        assert np.allclose(from_real_space(vals, grid), u.coeffs, rtol=0, atol=1e-12)

    def test_real_field_values(self):
        u = random_field(SpectralGrid(2, 4), 5, real=True)
        assert u.conjugate_symmetric()
        assert np.max(np.abs(u.values().imag)) < 1e-13

    def test_field_from_function(self):
        g = SpectralGrid(1, 8, 2.0)
        u = field_from_function(g, lambda x: np.cos(2 * np.pi * 3 * x / 2.0))
        expected = np.zeros(17)
        expected[8 + 3] = expected[8 - 3] = 0.5
        assert np.allclose(u.coeffs, expected, atol=1e-14)

    def test_evaluate_matches_grid_values(self):
        g = SpectralGrid(2, 3, 1.5)
        u = random_field(g, 2)
        P = 8
        x = g.coordinates(P)
        assert np.allclose(u.evaluate([x, x]), u.values(P), atol=1e-12)

    def test_translate_shifts_argument(self):
        g = SpectralGrid(1, 4)
        u = random_field(g, 9)
        y = np.array([0.1, 0.37])
        assert np.allclose(u.translate([0.2]).evaluate([y]), u.evaluate([y - 0.2]), atol=1e-12)


class TestProjection:
    def test_low_pass_identity(self):
        u = random_field(SpectralGrid(2, 4), 0)
        assert np.array_equal(project(u, LowPass(4)).coeffs, u.coeffs)

    def test_complementary(self):
        u = random_field(SpectralGrid(1, 6), 0)
        assert np.all(project(project(u, LowPass(3)), HighPass(3)).coeffs == 0)

    def test_partition_of_modes(self):
        u = random_field(SpectralGrid(3, 2), 0)
        total = project(u, NonZeroModes()) + project(u, ZeroModeOnly())
        assert np.array_equal(total.coeffs, u.coeffs)

    def test_cutoff_validation(self):
        with pytest.raises(ValueError):
            project(SpectralField.zeros(SpectralGrid(1, 3)), LowPass(4))

    @given(grids, st.integers(0, 5), st.floats(0.0, 2.0), st.integers(0, 2**16),
           st.sampled_from(["low", "high", "nonzero"]))
    def test_idempotent_and_commutes(self, grid, cutoff, s, seed, which):
        cutoff = min(cutoff, grid.modes)
        sel = {"low": LowPass(cutoff), "high": HighPass(cutoff), "nonzero": NonZeroModes()}[which]
        u = random_field(grid, seed)
        once = project(u, sel)
        assert np.array_equal(project(once, sel).coeffs, once.coeffs)
        a = project(apply_fractional_derivative(u, s), sel).coeffs
        b = apply_fractional_derivative(once, s).coeffs
        assert np.allclose(a, b, rtol=1e-14, atol=0)


class TestFieldValue:
    def test_coefficients_are_read_only(self):
        u = random_field(SpectralGrid(1, 3), 0)
        with pytest.raises(ValueError):
            u.coeffs[0] = 1.0

    def test_grid_mismatch(self):
        a = SpectralField.zeros(SpectralGrid(1, 3))
        b = SpectralField.zeros(SpectralGrid(1, 4))
        with pytest.raises(ValueError):
            a + b
