import numpy as np
import pytest

from swaplight import (
    AtomicConfig,
    ModeFunction,
    RegimeError,
    SwapParams,
    couplings_from_physics,
    duan_combination,
    mean_output,
    output_mode_shape,
)

OPERATING_XI = 1.0 / np.sqrt(6.3)
OPERATING_GAMMA = 1.0 / 5.7e-3


def default_atomic(**overrides):
    base = dict(
        a1=1.351987094,
        a2=0.015328652,
        photon_flux_per_s=2.145415e16,
        atom_count=3.6e11,
        beam_area_m2=np.pi * 0.01**2,
        detuning_Hz=855e6,
        linewidth_Hz=5.2e6,
        wavelength_m=852.35e-9,
        larmor_Hz=322e3,
        cell_length_m=0.022,
    )
    base.update(overrides)
    return AtomicConfig(**base)


class TestAtomicConfig:
    def test_regime_check(self):
        with pytest.raises(RegimeError, match="out of scope"):
            default_atomic(a2=0.12)  # 14 a2/a1 > 1
        with pytest.raises(RegimeError):
            default_atomic(a2=-0.01)

    def test_positivity(self):
        with pytest.raises(ValueError):
            default_atomic(photon_flux_per_s=0.0)
        with pytest.raises(ValueError):
            default_atomic(detuning_Hz=0.0)

    def test_a0_accepted_and_ignored(self):
        cfg = default_atomic(a0=3.0)
        params = couplings_from_physics(cfg)
        assert params.gamma_sw_per_s == couplings_from_physics(default_atomic()).gamma_sw_per_s


class TestCouplingsFromPhysics:
    def test_reproduces_operating_point(self):
        params = couplings_from_physics(default_atomic())
        assert abs(params.gamma_sw_per_s - OPERATING_GAMMA) < 1e-4 * OPERATING_GAMMA
        assert abs(1.0 / params.xi**2 - 6.3) < 1e-6

    def test_flux_scaling(self):
        base = couplings_from_physics(default_atomic())
        doubled = couplings_from_physics(
            default_atomic(photon_flux_per_s=2 * 2.145415e16)
        )
        assert abs(doubled.gamma_sw_per_s - 2 * base.gamma_sw_per_s) < 1e-9 * base.gamma_sw_per_s
        assert doubled.xi == base.xi

    def test_scaling_laws(self):
        base = default_atomic()
        p0 = couplings_from_physics(base)
        for field, exponent in (
            ("atom_count", 1.0),
            ("beam_area_m2", -2.0),
            ("detuning_Hz", -2.0),
        ):
            scaled = couplings_from_physics(
                default_atomic(**{field: getattr(base, field) * 1.7})
            )
            expected = p0.gamma_sw_per_s * 1.7**exponent
            assert abs(scaled.gamma_sw_per_s - expected) < 1e-9 * expected
            assert scaled.xi == p0.xi

    def test_qnd_limit(self):
        cfg = default_atomic(a2=1e-9)
        params = couplings_from_physics(cfg)
        assert params.xi < 1e-3
        assert abs(params.chi_a - params.chi_p) < 1e-3 * params.chi_p
        assert params.gamma_sw_per_s < 1e-4


class TestSwapParams:
    def test_chi_closed_forms(self):
        p = SwapParams(gamma_sw_per_s=200.0, xi=0.4, pulse_T_s=0.015)
        root = np.sqrt(100.0)
        assert abs(p.chi_a - root * (2.5 - 0.4)) < 1e-12 * p.chi_a
        assert abs(p.chi_p - root * (2.5 + 0.4)) < 1e-12 * p.chi_p

    def test_rate_identity(self):
        p = SwapParams(gamma_sw_per_s=321.0, xi=0.7, pulse_T_s=0.01)
        recovered = (p.chi_p**2 - p.chi_a**2) / 2.0
        assert abs(recovered - p.gamma_sw_per_s) < 1e-12 * p.gamma_sw_per_s

    def test_inconsistent_chi_rejected(self):
        with pytest.raises(ValueError, match="inconsistent"):
            SwapParams(gamma_sw_per_s=200.0, xi=0.4, pulse_T_s=0.015, chi_a=1.0)

    def test_regime(self):
        with pytest.raises(RegimeError):
            SwapParams(gamma_sw_per_s=200.0, xi=1.5, pulse_T_s=0.015)
        with pytest.raises(ValueError):
            SwapParams(gamma_sw_per_s=-1.0, xi=0.4, pulse_T_s=0.015)


class TestMeanOutput:
    def test_zero_displacement(self):
        p = SwapParams(gamma_sw_per_s=OPERATING_GAMMA, xi=OPERATING_XI, pulse_T_s=0.015)
        x, pq = mean_output(np.linspace(0, 0.015, 10), p, 0.0, 0.0)
        assert np.all(x == 0) and np.all(pq == 0)

    def test_amplitude_ratio_is_inverse_xi_squared(self):
        p = SwapParams(gamma_sw_per_s=OPERATING_GAMMA, xi=OPERATING_XI, pulse_T_s=0.015)
        x, pq = mean_output(0.0, p, x_atom_0=-3.0, p_atom_0=3.0)
        assert abs(x / pq - 6.3) < 1e-12 * 6.3

    def test_exponential_decay(self):
        p = SwapParams(gamma_sw_per_s=OPERATING_GAMMA, xi=OPERATING_XI, pulse_T_s=0.015)
        t0, t1 = 0.001, 0.001 + 1.0 / p.gamma_sw_per_s
        x0, _ = mean_output(t0, p, 1.0, 1.0)
        x1, _ = mean_output(t1, p, 1.0, 1.0)
        assert abs(x1 / x0 - np.exp(-1.0)) < 1e-12

    def test_time_window(self):
        p = SwapParams(gamma_sw_per_s=OPERATING_GAMMA, xi=OPERATING_XI, pulse_T_s=0.015)
        with pytest.raises(ValueError):
            mean_output(0.02, p, 1.0, 1.0)


class TestOutputModeShape:
    def test_constant_rate_gives_exponential(self):
        g0, T, n = 180.0, 0.015, 400
        t = np.linspace(0, T, n)
        mode = output_mode_shape(np.full(n, g0), t[1] - t[0])
        expected = np.exp(-g0 * t)
        expected /= np.sqrt(np.sum(expected**2) * (t[1] - t[0]))
        assert np.abs(mode.samples - expected).max() < 1e-6 * expected.max()

    def test_flat_top_profile(self):
        g0, T, n = 50.0, 0.015, 4000
        t = np.linspace(0, T, n)
        gamma = g0 / (1.0 - g0 * t)
        mode = output_mode_shape(gamma, t[1] - t[0])
        u = mode.samples
        assert np.abs(u / u.mean() - 1.0).max() < 1e-6

    def test_rescaling_changes_shape(self):
        # doubling a constant rate halves the 1/e time, so shapes differ
        n, dt = 400, 1e-4
        u1 = output_mode_shape(np.full(n, 100.0), dt).samples
        u2 = output_mode_shape(np.full(n, 200.0), dt).samples
        overlap = np.sum(u1 * u2) * dt
        assert overlap < 0.999

    def test_zero_profile_rejected(self):
        with pytest.raises(ValueError, match="zero"):
            output_mode_shape(np.zeros(100), 1e-4)
        with pytest.raises(ValueError):
            output_mode_shape(-np.ones(100), 1e-4)

    def test_nonnegative_and_normalized(self):
        rng = np.random.default_rng(5)
        gamma = rng.uniform(0.0, 400.0, size=300)
        mode = output_mode_shape(gamma, 5e-5)
        assert np.all(mode.samples >= 0.0)
        assert abs(np.sum(mode.samples**2) * mode.dt - 1.0) < 1e-9


class TestModeFunction:
    def test_normalization_invariant(self):
        with pytest.raises(ValueError, match="normalized"):
            ModeFunction(2.0 * np.ones(10), 0.1, normalized=True)

    def test_overlap(self):
        dt = 0.01
        u = np.ones(100) / np.sqrt(100 * dt)
        mode = ModeFunction(u, dt)
        assert abs(mode.overlap(mode) - 1.0) < 1e-12


class TestDuanCombination:
    def test_vacuum_boundary(self):
        assert duan_combination(1.0, 1.0) == 2.0

    def test_full_swap(self):
        xi2 = 1.0 / 6.3
        value = duan_combination(xi2, xi2)
        assert abs(value - 2.0 * xi2) < 1e-15
        assert value < 2.0

    def test_observed_level(self):
        r = 10.0 ** (-0.35)
        assert abs(duan_combination(r, r) - 2.0 * 10.0 ** (-0.35)) < 1e-12
        assert duan_combination(r, r) < 2.0

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            duan_combination(-0.1, 1.0)
