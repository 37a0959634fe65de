import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_unit
from so2conv.cg import HTensor, HTildeTensor, h_to_htilde, real_cg_table
from so2conv.conv import (
    ConvSpec,
    SO2Weights,
    aligned_conv,
    count_cost,
    filter_harmonics,
    loglog_slope,
    naive_conv,
    order_layout,
    so2_apply,
    so2_conv,
    so2_project,
    so2_unproject,
)
from so2conv.irreps import index, num_coeffs, orders
from so2conv.rotations import align_to_y, random_rotation, roll_d, rotate_irreps, rotation_about_y, wigner_d
from so2conv.sphere import eval_real_sh

Y_AXIS = np.array([0.0, 1.0, 0.0])


def literal_triple_sum(x, d, h, lmax):
    """Scalar loops over (l_i, l_f, l_o, m_i, m_f, m_o); also counts multiplies."""
    table = real_cg_table(lmax)
    y = filter_harmonics(2 * lmax, d)
    out = np.zeros_like(x)
    mults = 0
    for li, lf, lo in table.triples():
        c = table[li, lf, lo]
        for ko in range(2 * lo + 1):
            acc = np.zeros(x.shape[1])
            for ki in range(2 * li + 1):
                for kf in range(2 * lf + 1):
                    acc += x[li * li + ki] * c[ki, kf, ko] * y[lf * lf + kf]
                    mults += 2
            out[lo * lo + ko] += h.values[(li, lf, lo)] * acc
            mults += 1
    return out, mults


def setup(lmax, channels, rng):
    x = rng.standard_normal((num_coeffs(lmax), channels))
    return x, random_unit(rng), HTensor.random(lmax, channels, rng)


class TestNaive:
    def test_scalar_path(self, rng):
        spec = ConvSpec(0, 0, 3, ((0, 0, 0),))
        x = rng.standard_normal((1, 3))
        h = HTensor(0, {(0, 0, 0): np.ones(3)})
        out = naive_conv(x, random_unit(rng), h, spec)
        assert np.allclose(out, x, atol=1e-15)

    def test_matches_scalar_loop_oracle(self, rng):
        x, d, h = setup(2, 2, rng)
        ref, _ = literal_triple_sum(x, d, h, 2)
        assert np.abs(naive_conv(x, d, h, ConvSpec(2, 2, 2)) - ref).max() < 1e-13

    def test_equivariance(self, rng):
        spec = ConvSpec(4, 4, 2)
        for _ in range(100):
            x, d, h = setup(4, 2, rng)
            R = random_rotation(rng)
            D = wigner_d(4, R)
            lhs = naive_conv(rotate_irreps(x, D), R @ d, h, spec)
            rhs = rotate_irreps(naive_conv(x, d, h, spec), D)
            assert np.abs(lhs - rhs).max() < 1e-9

    def test_filter_is_delta_at_primary_axis(self):
        y = filter_harmonics(6, Y_AXIS)
        expected = np.zeros(49)
        expected[[index(l, 0) for l in range(7)]] = 1.0
        assert np.abs(y - expected).max() < 1e-14

    def test_shape_mismatch(self, rng):
        with pytest.raises(ValueError):
            naive_conv(np.zeros((9, 2)), Y_AXIS, HTensor.zeros(2, 2), ConvSpec(2, 2, 3))


class TestAligned:
    def test_primary_axis_needs_no_rotation(self, rng):
        x, _, h = setup(3, 2, rng)
        spec = ConvSpec(3, 3, 2)
        assert np.abs(aligned_conv(x, Y_AXIS, h, spec) - naive_conv(x, Y_AXIS, h, spec)).max() < 1e-13

    def test_matches_naive_l6(self, rng):
        spec = ConvSpec(6, 6, 2)
        for _ in range(5):
            x, d, h = setup(6, 2, rng)
            assert np.abs(aligned_conv(x, d, h, spec) - naive_conv(x, d, h, spec)).max() < 1e-10

    def test_zero_input(self, rng):
        _, d, h = setup(3, 2, rng)
        assert not np.any(aligned_conv(np.zeros((16, 2)), d, h, ConvSpec(3, 3, 2)))


class TestSO2:
    @pytest.mark.parametrize("lmax", [1, 2, 4, 6, 8])
    def test_matches_naive(self, lmax, rng):
        spec = ConvSpec(lmax, lmax, 3)
        x = rng.standard_normal((100, num_coeffs(lmax), 3))
        d = random_unit(rng, 100)
        h = HTensor.random(lmax, 3, rng)
        ref = naive_conv(x, d, h, spec)
        tol = 1e-10 if lmax <= 6 else 1e-9
        assert np.abs(so2_conv(x, d, h_to_htilde(h), spec) - ref).max() < tol

    def test_roll_invariance(self, rng):
        spec = ConvSpec(5, 5, 2)
        x = rng.standard_normal((num_coeffs(5), 2))
        w = SO2Weights.random(5, 5, 2, rng)
        d = random_unit(rng)
        a = so2_conv(x, d, w, spec)
        for gamma in rng.uniform(0, 2 * math.pi, 5):
            assert np.abs(so2_conv(x, d, w, spec, roll=gamma) - a).max() < 1e-9

    def test_equivariance_l6(self, rng):
        spec = ConvSpec(6, 6, 2)
        w = SO2Weights.random(6, 6, 2, rng)
        x = rng.standard_normal((100, 49, 2))
        d = random_unit(rng, 100)
        R = random_rotation(rng, 100)
        D = wigner_d(6, R)
        lhs = rotate_irreps(so2_conv(x, d, w, spec), D)
        rhs = so2_conv(rotate_irreps(x, D), np.einsum("nij,nj->ni", R, d), w, spec)
        assert np.abs(lhs - rhs).max() < 1e-9

    @given(st.integers(0, 2**32 - 1), st.floats(-3, 3))
    def test_linear_in_x(self, seed, alpha):
        rng = np.random.default_rng(seed)
        spec = ConvSpec(3, 2, 2)
        w = SO2Weights.random(3, 2, 2, rng)
        x, y = rng.standard_normal((2, 16, 2))
        d = random_unit(rng)
        lhs = so2_conv(alpha * x + y, d, w, spec)
        rhs = alpha * so2_conv(x, d, w, spec) + so2_conv(y, d, w, spec)
        assert np.abs(lhs - rhs).max() < 1e-10

    def test_truncation_matches_full_when_high_orders_vanish(self, rng):
        L, M = 5, 2
        d = random_unit(rng)
        D = wigner_d(L, align_to_y(d))
        xt = rng.standard_normal((num_coeffs(L), 2))
        xt[np.abs(orders(L)) > M] = 0.0
        x = rotate_irreps(xt, D.transpose())
        full = SO2Weights.random(L, L, 2, rng)
        trunc = SO2Weights(L, M, full.plus[: M + 1], full.minus[: M + 1])
        a = so2_conv(x, d, full, ConvSpec(L, L, 2))
        b = so2_conv(x, d, trunc, ConvSpec(L, M, 2))
        # orders above M carry no input, so the extra weights contribute nothing
        assert np.abs(a - b).max() < 1e-10

    def test_zonal_input_with_m0_weights_mixes_degrees_only(self, rng):
        L = 4
        xt = np.zeros((num_coeffs(L), 1))
        xt[[index(l, 0) for l in range(L + 1)], 0] = rng.standard_normal(L + 1)
        w = SO2Weights.random(L, 0, 1, rng)
        out = so2_apply(xt, w)
        rows0 = order_layout(L, 0)[0][0]
        assert np.allclose(out[rows0, 0], w.plus[0][0] @ xt[rows0, 0])
        assert not np.any(np.delete(out, rows0, axis=0))

    def test_accepts_htilde_and_checks_shapes(self, rng):
        ht = HTildeTensor.random(2, 2, rng)
        x = rng.standard_normal((9, 2))
        d = random_unit(rng)
        a = so2_conv(x, d, ht, ConvSpec(2, 2, 2))
        b = so2_conv(x, d, SO2Weights.from_htilde(ht), ConvSpec(2, 2, 2))
        assert np.array_equal(a, b)
        with pytest.raises(ValueError):
            so2_conv(x, d, SO2Weights.random(2, 1, 2, rng), ConvSpec(2, 2, 2))


class TestProjection:
    def test_round_trip_exact(self, rng):
        x = rng.standard_normal((num_coeffs(5), 3))
        assert np.array_equal(so2_unproject(so2_project(x)), x)

    def test_pairs_rotate_by_k_gamma(self, rng):
        L = 4
        x = rng.standard_normal((num_coeffs(L), 2))
        gamma = 0.83
        before = so2_project(x)
        after = so2_project(rotate_irreps(x, roll_d(L, gamma)))
        for l in range(L + 1):
            assert np.allclose(after[l][0], before[l][0], atol=1e-14)
            for k in range(1, l + 1):
                c, s = math.cos(k * gamma), math.sin(k * gamma)
                rot = np.array([[c, -s], [s, c]])
                assert np.allclose(after[l][k], rot @ before[l][k], atol=1e-13)

    def test_roll_matches_circular_harmonics(self):
        # coefficient rotation by gamma realizes F(R^-1 r), i.e. phi -> phi - gamma
        D = roll_d(1, 0.4)
        d = np.array([math.sin(1.0), 0.0, math.cos(1.0)])
        x = np.zeros(4)
        x[index(1, 1)] = 1.0
        lhs = eval_real_sh(1, d) @ rotate_irreps(x, D)
        rhs = eval_real_sh(1, rotation_about_y(-0.4) @ d) @ x
        assert lhs == pytest.approx(rhs, abs=1e-14)


class TestCost:
    def test_naive_count_matches_instrumented_loop(self, rng):
        for L in (1, 2):
            x, d, h = setup(L, 1, rng)
            _, mults = literal_triple_sum(x, d, h, L)
            assert count_cost("naive", L, L, 1).multiplies == mults

    def test_base_case(self):
        n = count_cost("naive", 1, 1, 1)
        s = count_cost("so2", 1, 1, 1)
        assert 0 < s.multiplies <= n.multiplies

    def test_counts_are_integers_and_scale_with_channels(self):
        for path in ("naive", "so2"):
            a, b = count_cost(path, 3, 3, 1), count_cost(path, 3, 3, 5)
            assert isinstance(a.multiplies, int)
            assert b.multiplies == 5 * a.multiplies and b.adds == 5 * a.adds

    def test_so2_slope(self):
        ls = [2, 4, 6, 8]
        assert loglog_slope(ls, [count_cost("so2", L, L, 64).multiplies for L in ls]) <= 3.5

    def test_naive_slope_approaches_six(self):
        # the local slope keeps rising toward the asymptotic degree 6
        c = [count_cost("naive", L, L, 1).multiplies for L in (8, 16, 32)]
        assert 5.0 < loglog_slope([8, 16], c[:2]) < loglog_slope([16, 32], c[1:]) < 6.0

    def test_unknown_path(self):
        with pytest.raises(ValueError):
            count_cost("fft", 2)

    def test_wall_time_is_measured(self):
        r = count_cost("so2", 2, 2, 2, edges=5)
        assert r.wall_time is not None and r.wall_time >= 0 and r.edges == 5


def test_spec_validation():
    with pytest.raises(ValueError):
        ConvSpec(2, 3)
    with pytest.raises(ValueError):
        ConvSpec(2, 2, 1, ((0, 2, 1),))
    assert ConvSpec(3).mmax == 3
