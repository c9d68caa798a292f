import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nordwave import spectral as sp
from nordwave.spectral import (SpectralField, cubic_one_plus, from_physical, gradient, h_inner_product,
                               make_field, mean_part, multiply, product, random_field, sobolev_norm,
                               to_physical)

from conftest import crop, direct_convolve


def rand(N, seed, **kw):
    return random_field(N, np.random.default_rng(seed), **kw)


def direct_sum(field, x):
    """Evaluate the Fourier series at one point by brute force."""
    lat = field.lattice
    phase = np.exp(1j * (lat.k1 * x[0] + lat.k2 * x[1] + lat.k3 * x[2]))
    return np.sum(field.coeffs * phase)


class TestConstruction:
    def test_constant(self):
        f = make_field(1, [((0, 0, 0), 1.0)])
        np.testing.assert_allclose(to_physical(f), 1.0, atol=1e-15)

    def test_hermitian_mirror(self):
        f = make_field(2, [((1, 0, 0), 0.5)])
        assert f.coeff((-1, 0, 0)) == 0.5
        assert f.hermitian_defect() == 0.0

    def test_inconsistent_pair_rejected(self):
        with pytest.raises(ValueError):
            make_field(2, [((1, 0, 0), 0.5), ((-1, 0, 0), 0.3)])

    def test_immutable(self):
        f = make_field(2, [((1, 0, 0), 0.5)])
        with pytest.raises(ValueError):
            f.coeffs[0, 0, 0] = 1.0

    def test_bad_shape(self):
        with pytest.raises(ValueError):
            SpectralField(np.zeros((4, 4, 4)))


class TestTransforms:
    def test_cosine_samples(self):
        f = make_field(2, [((1, 0, 0), 1.0)])
        x = sp.grid_points(8)
        expect = 2 * np.cos(x)[:, None, None] * np.ones((8, 8, 8))
        np.testing.assert_allclose(to_physical(f, 8), expect, atol=1e-14)

    def test_direct_summation(self):
        f = rand(4, 1)
        samples = to_physical(f, 16)
        x = sp.grid_points(16)
        rng = np.random.default_rng(5)
        for _ in range(5):
            i, j, k = rng.integers(0, 16, size=3)
            ref = direct_sum(f, (x[i], x[j], x[k]))
            assert abs(ref.imag) < 1e-12
            assert abs(samples[i, j, k] - ref.real) < 1e-12 * max(1, abs(ref))

    def test_from_physical_cosine(self):
        x = sp.grid_points(8)
        s = 2 * np.cos(x)[None, :, None] * np.ones((8, 8, 8))
        f = from_physical(s, 3)
        expect = make_field(3, [((0, 1, 0), 1.0)])
        np.testing.assert_allclose(f.coeffs, expect.coeffs, atol=1e-15)

    def test_constant_samples(self):
        f = from_physical(np.full((6, 6, 6), 2.5), 2)
        assert f.coeff((0, 0, 0)) == pytest.approx(2.5, abs=1e-15)
        assert np.abs(f.coeffs).sum() == pytest.approx(2.5, abs=1e-13)

    def test_complex_round_trip(self):
        rng = np.random.default_rng(3)
        c = rng.standard_normal((7, 7, 7)) + 1j * rng.standard_normal((7, 7, 7))
        f = SpectralField(c, real=False)
        back = from_physical(to_physical(f), 3)
        np.testing.assert_allclose(back.coeffs, c, atol=1e-12)

    @given(st.integers(1, 5), st.integers(0, 2**31), st.sampled_from([None, 0, 3]))
    def test_round_trip(self, N, seed, pad):
        f = rand(N, seed)
        grid = None if pad is None else 2 * N + 2 + pad
        back = from_physical(to_physical(f, grid), N)
        assert np.abs(back.coeffs - f.coeffs).max() <= 1e-12 * max(1.0, np.abs(f.coeffs).max())


class TestNorms:
    def test_constant_seminorm(self):
        f = make_field(2, [((0, 0, 0), 5.0)])
        assert sobolev_norm(f, 2) == 0.0
        assert sobolev_norm(f, 2, homogeneous=False) == 5.0

    def test_cosine(self):
        f = make_field(3, [((1, 0, 0), 0.5)])
        assert sobolev_norm(f, 2) == pytest.approx(np.sqrt(0.5), rel=1e-15)

    def test_brute_force(self):
        f = rand(3, 7)
        total = 0.0
        for idx in np.ndindex(f.coeffs.shape):
            k = np.array(idx) - 3
            kk = float(k @ k)
            if kk:
                total += kk**2.5 * abs(f.coeffs[idx]) ** 2
        assert sobolev_norm(f, 2.5) == pytest.approx(np.sqrt(total), rel=1e-13)

    def test_inner_product_self(self):
        f = rand(3, 2)
        assert h_inner_product(f, f, 2) == pytest.approx(sobolev_norm(f, 2) ** 2, rel=1e-13)

    def test_inner_product_disjoint(self):
        a = make_field(2, [((1, 0, 0), 1.0)])
        b = make_field(2, [((0, 2, 0), 1.0)])
        assert h_inner_product(a, b, 2) == 0.0

    def test_inner_product_symmetric(self):
        a, b = rand(3, 4), rand(3, 5)
        assert h_inner_product(a, b, 2) == pytest.approx(h_inner_product(b, a, 2), rel=1e-13)

    @given(st.integers(1, 6), st.integers(0, 2**31), st.floats(0, 4))
    def test_gradient_identity(self, N, seed, m):
        u = rand(N, seed, decay=1.0)
        lhs = sobolev_norm(u, m + 1)
        grad = gradient(u)
        rhs = np.sqrt(sum(sobolev_norm(g, m) ** 2 for g in grad))
        assert lhs == pytest.approx(rhs, rel=1e-12)

    @given(st.integers(1, 6), st.integers(0, 2**31), st.sampled_from([2.0, 2.5, 3.0]))
    def test_decomposition(self, N, seed, m):
        u = rand(N, seed)
        full = sobolev_norm(u, m, homogeneous=False) ** 2
        assert full == pytest.approx(abs(u.coeffs[N, N, N]) ** 2 + sobolev_norm(u, m) ** 2, rel=1e-12)


class TestOperators:
    def test_gradient_of_constant(self):
        g = gradient(make_field(2, [((0, 0, 0), 3.0)]))
        assert all(np.abs(c.coeffs).max() == 0 for c in g)

    def test_gradient_of_cosine(self):
        g = gradient(make_field(2, [((1, 0, 0), 0.5)]))
        minus_sin = make_field(2, [((1, 0, 0), 0.5j)])
        np.testing.assert_allclose(g[0].coeffs, minus_sin.coeffs, atol=1e-16)
        assert np.abs(g[1].coeffs).max() == 0 and np.abs(g[2].coeffs).max() == 0

    def test_divergence_of_gradient_is_laplacian(self):
        u = rand(3, 9)
        lap = sp.divergence(gradient(u))
        np.testing.assert_allclose(lap.coeffs, -u.lattice.ksq * u.coeffs, atol=1e-13)

    def test_mean_part(self):
        assert mean_part(make_field(2, [((0, 0, 0), 4.0)])) == 4.0
        assert mean_part(make_field(2, [((1, 0, 0), 0.5)])) == 0.0
        assert mean_part(make_field(2, [((0, 0, 0), 3.0), ((0, 1, 0), 0.5)])) == 3.0


class TestProducts:
    def test_identity_factor(self):
        one = make_field(3, [((0, 0, 0), 1.0)])
        g = rand(3, 1)
        np.testing.assert_allclose(multiply(one, g).coeffs, g.coeffs, atol=1e-14)

    @pytest.mark.parametrize("N", [1, 2])
    def test_cosine_square(self, N):
        c = make_field(N, [((1, 0, 0), 0.5)])
        out = multiply(c, c)
        assert out.coeff((0, 0, 0)) == pytest.approx(0.5, abs=1e-15)
        if N >= 2:
            assert out.coeff((2, 0, 0)) == pytest.approx(0.25, abs=1e-15)
        assert np.abs(out.coeffs).sum() == pytest.approx(0.5 + (0.5 if N >= 2 else 0.0), abs=1e-14)

    def test_pair_vs_convolution(self):
        f, g = rand(4, 10), rand(4, 11)
        ref = crop(direct_convolve(f.coeffs, g.coeffs), 4)
        out = multiply(f, g)
        assert np.abs(out.coeffs - ref).max() <= 1e-12 * np.abs(ref).max()

    def test_cube_trivial(self):
        assert np.abs(cubic_one_plus(sp.zeros(2)).coeffs - make_field(2, [((0, 0, 0), 1.0)]).coeffs).max() == 0
        c = make_field(2, [((0, 0, 0), 0.3)])
        assert cubic_one_plus(c).coeff((0, 0, 0)) == pytest.approx(1.3**3, rel=1e-15)

    def test_cube_vs_convolution(self):
        u = rand(3, 12)
        w = u.coeffs.copy()
        w[3, 3, 3] += 1.0
        ref = crop(direct_convolve(direct_convolve(w, w), w), 3)
        out = cubic_one_plus(u)
        assert np.abs(out.coeffs - ref).max() <= 1e-11 * np.abs(ref).max()

    def test_untruncated_output(self):
        u = rand(2, 13)
        ref = direct_convolve(u.coeffs, u.coeffs)
        out = product([u, u], N_out=4)
        assert np.abs(out.coeffs - ref).max() <= 1e-12 * np.abs(ref).max()

    @given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**31))
    def test_dealiasing_equals_convolution(self, N, N_out, seed):
        f, g = rand(N, seed), rand(N, seed + 1)
        ref = crop(direct_convolve(f.coeffs, g.coeffs), N_out)
        out = product([f, g], N_out=N_out)
        assert np.abs(out.coeffs - ref).max() <= 1e-11 * np.abs(ref).max()
        assert out.hermitian_defect() == 0.0


class TestMultiplicationConstant:
    def test_unit_pair(self):
        one = make_field(2, [((0, 0, 0), 1.0)])
        ratio = sobolev_norm(multiply(one, one), 2, False) / sobolev_norm(one, 2, False) ** 2
        assert ratio == 1.0
        assert sp.multiplication_constant(2, trials=0).value >= 1.0

    def test_empirical_below(self):
        mc = sp.multiplication_constant(2, trials=200, N=6)
        assert 0 < mc.empirical_max <= mc.value
        assert mc.trials == 200

    def test_monotone_in_m(self):
        vals = [sp.multiplication_constant(m, trials=0).value for m in (2.0, 2.5, 3.0)]
        assert vals == sorted(vals)

    def test_value_at_two(self):
        # 2^m for the algebra constant times 2^m for the norm equivalence
        mc = sp.multiplication_constant(2, trials=0)
        assert mc.value == pytest.approx(16.0 * np.sqrt(mc.lattice_sum + mc.tail_bound), rel=1e-15)
        # the tail bound must cover what a larger ball adds
        wider, _ = sp._bessel_sum(2.0, 80)
        assert mc.lattice_sum < wider <= mc.lattice_sum + mc.tail_bound

    def test_override_too_small(self):
        with pytest.raises(ValueError):
            sp.multiplication_constant(2, trials=20, N=3, override=0.5)

    def test_needs_m_above_three_halves(self):
        with pytest.raises(ValueError):
            sp.multiplication_constant(1.5)
