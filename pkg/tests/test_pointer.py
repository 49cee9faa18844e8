import math
from fractions import Fraction

import numpy as np
import pytest

from macroloc import (
    InvalidMagnetizationError,
    Magnetization,
    PointerShape,
    ShiftMixture,
    cjk_squared,
    collapse_posterior,
    log_binomial_weight,
    magnet_amplitudes,
    no_signaling_deviation,
    pointer_density,
    pointer_distribution_of_state,
    reduce_single_sum,
    rho_x_conditional,
    rho_z_conditional,
    rho_z_marginal,
    total_variation,
    valid_magnetizations,
)


class TestPointerDensity:
    def test_peak_unit_width(self):
        assert pointer_density(0.0, PointerShape(1.0)) == pytest.approx(
            0.3989422804014327, abs=1e-12
        )

    def test_one_sigma_value(self):
        # frozen from a 40-digit evaluation of exp(-1/2)/sqrt(8*pi)
        assert pointer_density(2.0, PointerShape(2.0)) == pytest.approx(
            0.1209853622595716749, rel=1e-14
        )

    def test_normalization(self):
        for delta in (0.3, 1.0, 4.0):
            grid = np.linspace(-10 * delta, 10 * delta, 20001)
            total = np.trapezoid(pointer_density(grid, PointerShape(delta)), grid)
            assert total == pytest.approx(1.0, abs=1e-10)

    def test_invalid_width(self):
        with pytest.raises(ValueError):
            PointerShape(0.0)
        with pytest.raises(ValueError):
            PointerShape(-1.0)


class TestLogBinomialWeight:
    def test_small_cases(self):
        assert log_binomial_weight(2, 1) == pytest.approx(math.log(0.5), abs=1e-15)
        assert log_binomial_weight(0, 0) == 0.0

    def test_out_of_range(self):
        assert log_binomial_weight(5, -1) == -math.inf
        assert log_binomial_weight(5, 6) == -math.inf

    @pytest.mark.parametrize(
        "n,k",
        [(1000, 500), (1000, 17), (10**6, 400000), (10**6, 1)],
    )
    def test_against_exact_integer_log(self, n, k):
        # independent oracle: exact big-integer binomial (GMP), then its log
        import gmpy2

        expected = math.log(int(gmpy2.bincoef(n, k))) - n * math.log(2.0)
        assert log_binomial_weight(n, k) == pytest.approx(expected, rel=1e-13)

    def test_negative_n_rejected(self):
        with pytest.raises(ValueError):
            log_binomial_weight(-1, 0)


def brute_force_magnet_weights(n, theta):
    """Expand the n-fold tensor product state over all 2^n basis states and
    project on the symmetric k-up sectors."""
    c, s = math.cos(theta / 2.0), math.sin(theta / 2.0)
    sector = np.zeros(n + 1)
    for bits in range(2**n):
        ups = bin(bits).count("1")
        sector[ups] += c**ups * s ** (n - ups) / math.sqrt(math.comb(n, ups))
    return sector**2


class TestMagnetAmplitudes:
    def test_all_up(self):
        st = magnet_amplitudes(3, 0.0)
        w = st.weights()
        assert w[3] == pytest.approx(1.0, abs=1e-15)
        assert np.all(w[:3] == 0.0)

    def test_single_spin_plus_x(self):
        w = magnet_amplitudes(1, math.pi / 2).weights()
        assert w == pytest.approx([0.5, 0.5], abs=1e-15)

    def test_four_spins_pi_third_frozen(self):
        # brute-force tensor expansion gives C(4,k) 3^k / 256 exactly
        w = magnet_amplitudes(4, math.pi / 3).weights()
        expected = [1 / 256, 12 / 256, 54 / 256, 108 / 256, 81 / 256]
        assert w == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("n,theta", [(4, math.pi / 3), (5, 0.7), (6, 2.9)])
    def test_matches_brute_force(self, n, theta):
        w = magnet_amplitudes(n, theta).weights()
        assert w == pytest.approx(brute_force_magnet_weights(n, theta), abs=1e-13)

    def test_theta_range(self):
        with pytest.raises(ValueError):
            magnet_amplitudes(2, -0.1)
        with pytest.raises(ValueError):
            magnet_amplitudes(2, 3.2)


class TestPointerDistributionOfState:
    def test_all_up_single_shift(self):
        mix = pointer_distribution_of_state(magnet_amplitudes(5, 0.0), PointerShape(1.0))
        assert mix.components == ((5, 1.0),)

    def test_all_down_single_shift(self):
        mix = pointer_distribution_of_state(magnet_amplitudes(5, math.pi), PointerShape(1.0))
        assert mix.components == ((-5, 1.0),)

    def test_broadening_law(self):
        mix = pointer_distribution_of_state(
            magnet_amplitudes(16, math.pi / 2), PointerShape(4.0)
        )
        assert mix.mean() == pytest.approx(0.0, abs=1e-12)
        assert mix.variance() == pytest.approx(32.0, abs=1e-9)

    @pytest.mark.parametrize("n", [1, 16, 256, 10**4])
    def test_broadening_law_scaling(self, n):
        delta = 1.5
        mix = pointer_distribution_of_state(
            magnet_amplitudes(n, math.pi / 2), PointerShape(delta)
        )
        assert mix.variance() == pytest.approx(delta**2 + n, abs=1e-9)


class TestCollapsePosterior:
    def test_strong_regime_collapses(self):
        state = magnet_amplitudes(1, math.pi / 2)
        post, _ = collapse_posterior(state, PointerShape(0.01), x_p=1.0)
        assert post.weights()[1] >= 1 - 1e-8

    def test_weak_regime_undisturbed(self):
        state = magnet_amplitudes(1, math.pi / 2)
        post, _ = collapse_posterior(state, PointerShape(100.0), x_p=0.0)
        fidelity = abs(np.vdot(state.amplitudes, post.amplitudes)) ** 2
        assert fidelity >= 1 - 1e-6

    def test_eigenstate_not_disturbed(self):
        state = magnet_amplitudes(2, 0.0)
        for x_p in (-1.0, 0.0, 2.0, 7.3):
            for delta in (0.1, 1.0, 30.0):
                post, _ = collapse_posterior(state, PointerShape(delta), x_p)
                assert post.amplitudes == pytest.approx(state.amplitudes, abs=1e-14)

    def test_norm_matches_mixture_density(self):
        state = magnet_amplitudes(6, 1.1)
        shape = PointerShape(1.7)
        mix = pointer_distribution_of_state(state, shape)
        for x_p in (-3.0, 0.0, 1.5, 4.25):
            _, norm2 = collapse_posterior(state, shape, x_p)
            assert norm2 == pytest.approx(float(mix.density(x_p)[0]), abs=1e-10)


class TestRhoZ:
    def test_conditional_single_component(self):
        mix = rho_z_conditional(Magnetization(1, 1), PointerShape(1.0))
        assert mix.components == ((1, Fraction(1)),)
        mix = rho_z_conditional(Magnetization(-4, 10), PointerShape(3.0))
        assert mix.components == ((-4, Fraction(1)),)

    def test_parity_violation(self):
        with pytest.raises(InvalidMagnetizationError):
            Magnetization(1, 2)
        with pytest.raises(InvalidMagnetizationError):
            Magnetization(5, 3)

    def test_marginal_small(self):
        mix = rho_z_marginal(2, PointerShape(1.0), exact=True)
        assert mix.components == (
            (-2, Fraction(1, 4)),
            (0, Fraction(1, 2)),
            (2, Fraction(1, 4)),
        )
        mix = rho_z_marginal(1, PointerShape(1.0), exact=True)
        assert mix.components == ((-1, Fraction(1, 2)), (1, Fraction(1, 2)))

    def test_marginal_float_matches_exact_integers(self):
        n = 30
        mix = rho_z_marginal(n, PointerShape(1.0))
        for (s, w), j in zip(mix.components, range(n + 1)):
            assert s == 2 * j - n
            assert float(w) == pytest.approx(math.comb(n, j) / 2**n, rel=1e-13)


class TestCjkAndRhoX:
    def test_cjk_n2_mu0(self):
        c2 = cjk_squared(Magnetization(0, 2), exact=True)
        assert c2.shape == (2, 2)
        assert all(c2[j, k] == Fraction(1, 4) for j in range(2) for k in range(2))

    def test_cjk_n2_mu2(self):
        c2 = cjk_squared(Magnetization(2, 2), exact=True)
        assert c2.shape == (3, 1)
        assert [c2[j, 0] for j in range(3)] == [
            Fraction(1, 4),
            Fraction(1, 2),
            Fraction(1, 4),
        ]

    @pytest.mark.parametrize("n,mu", [(2, 0), (5, 3), (8, -4), (7, 7)])
    def test_cjk_normalization(self, n, mu):
        c2 = cjk_squared(Magnetization(mu, n), exact=True)
        assert sum(c2.ravel()) == 1

    def test_rho_x_n2(self):
        shape = PointerShape(1.0)
        expected = (
            (-2, Fraction(1, 4)),
            (0, Fraction(1, 2)),
            (2, Fraction(1, 4)),
        )
        for mu in (0, 2):
            mix = rho_x_conditional(Magnetization(mu, 2), shape, exact=True)
            assert mix.components == expected

    def test_rho_x_n1(self):
        mix = rho_x_conditional(Magnetization(1, 1), PointerShape(1.0), exact=True)
        assert mix.components == ((-1, Fraction(1, 2)), (1, Fraction(1, 2)))


class TestReduceSingleSum:
    def test_vandermonde_example(self):
        # N=4, mu=2, s=2: C(3,0)C(1,2) + C(3,1)C(1,1) + C(3,2)C(1,0) = 6 = C(4,2)
        weights = reduce_single_sum(Magnetization(2, 4))
        assert weights[2] == Fraction(6, 16)
        assert weights == [Fraction(math.comb(4, s), 16) for s in range(5)]

    def test_matches_marginal(self):
        weights = reduce_single_sum(Magnetization(0, 2))
        assert weights == [Fraction(1, 4), Fraction(1, 2), Fraction(1, 4)]

    def test_degenerate_mu_equals_n(self):
        for n in (1, 4, 9):
            weights = reduce_single_sum(Magnetization(n, n))
            assert weights == [Fraction(math.comb(n, s), 2**n) for s in range(n + 1)]

    @pytest.mark.parametrize("n", [3, 6, 11])
    def test_equals_grouped_cjk_exactly(self, n):
        for mu in range(-n, n + 1, 2):
            mag = Magnetization(mu, n)
            c2 = cjk_squared(mag, exact=True)
            grouped = [Fraction(0)] * (n + 1)
            for j in range(mag.n_up + 1):
                for k in range(mag.n_down + 1):
                    grouped[j + k] += c2[j, k]
            assert reduce_single_sum(mag) == grouped


class TestTotalVariation:
    def test_identical_is_zero(self):
        mix = rho_z_marginal(4, PointerShape(1.0))
        assert total_variation(mix, mix) == pytest.approx(0.0, abs=1e-14)

    def test_disjoint_supports(self):
        shape = PointerShape(1.0)
        a = ShiftMixture(1000, ((0, 1.0),), shape)
        b = ShiftMixture(1000, ((1000, 1.0),), shape)
        assert total_variation(a, b) == pytest.approx(1.0, abs=1e-10)

    def test_mismatched_shapes_rejected(self):
        a = rho_z_marginal(2, PointerShape(1.0))
        b = rho_z_marginal(2, PointerShape(2.0))
        with pytest.raises(ValueError):
            total_variation(a, b)

    def test_main_theorem_case(self):
        shape = PointerShape(2.0)
        mx = rho_x_conditional(Magnetization(4, 16), shape)
        mz = rho_z_marginal(16, shape)
        assert total_variation(mx, mz) <= 1e-10


class TestNoSignalingEquality:
    @pytest.mark.parametrize("n", [1, 2, 3, 7, 12, 20])
    def test_exact_weight_equality(self, n):
        shape = PointerShape(1.0)
        marginal = rho_z_marginal(n, shape, exact=True).components
        for mag in valid_magnetizations(n):
            assert rho_x_conditional(mag, shape, exact=True).components == marginal

    @pytest.mark.parametrize("n", [5, 16, 33])
    def test_float_deviation_small(self, n):
        for delta in (0.2, 1.0, math.sqrt(n)):
            assert no_signaling_deviation(n, PointerShape(delta)) <= 1e-10


class TestShiftMixtureInvariants:
    def test_weights_must_sum_to_one(self):
        with pytest.raises(ValueError):
            ShiftMixture(2, ((0, 0.5), (2, 0.4)), PointerShape(1.0))

    def test_shifts_strictly_increasing(self):
        with pytest.raises(ValueError):
            ShiftMixture(2, ((2, 0.5), (0, 0.5)), PointerShape(1.0))

    def test_csv_serialization(self, tmp_path):
        import io

        mix = rho_z_marginal(2, PointerShape(1.0))
        buf = io.StringIO()
        mix.write_csv(buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "shift,weight"
        assert lines[1].startswith("-2,0.25")
        assert len(lines) == 4
