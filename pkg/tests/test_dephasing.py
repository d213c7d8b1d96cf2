"""Dephasing Monte Carlo tests.

The scalar run_trial is the reference; the vectorized ensemble must replay
its streams exactly. Statistical oracles (reset mean, Gaussian-walk decay
constant) are closed-form.
"""

import math

import numpy as np
import pytest

from qnetsim.dephasing import (
    DephasingConfig,
    SingleExponentialReset,
    TwoTimescaleReset,
    curve_from_phases,
    decay_constant,
    echo_config,
    no_echo_config,
    run_ensemble,
    run_trial,
    sample_initial_state,
    sample_reset_time,
)


def tiny_config(**overrides) -> DephasingConfig:
    base = dict(
        a_par=2.0 * math.pi * 80.0,
        t_a=6.1e-6,
        t_b=2.4e-6,
        p_init=0.03,
        p_opt=0.01,
        reset_model=TwoTimescaleReset(),
        n_trials=50,
        n_samples=4,
        p_mw=0.5,
    )
    base.update(overrides)
    return DephasingConfig(**base)


class TestSamplers:
    def test_initial_state_weights(self):
        rng = np.random.default_rng(0)
        draws = np.array([sample_initial_state(0.2, rng) for _ in range(20000)])
        assert np.mean(draws == 0) == pytest.approx(0.8, abs=0.01)
        assert np.mean(draws == -1) == pytest.approx(0.1, abs=0.01)
        assert np.mean(draws == 1) == pytest.approx(0.1, abs=0.01)

    def test_initial_state_degenerate(self):
        rng = np.random.default_rng(1)
        assert all(sample_initial_state(0.0, rng) == 0 for _ in range(100))
        assert all(sample_initial_state(1.0, rng) != 0 for _ in range(100))

    def test_mixture_mean_analytic(self):
        m = TwoTimescaleReset()
        f = 0.480 / (0.480 + 0.503)
        assert m.mean == pytest.approx(f * 142e-9 + (1 - f) * 905e-9)
        assert m.mean == pytest.approx(532.4e-9, abs=0.1e-9)

    def test_mixture_sample_mean(self):
        rng = np.random.default_rng(3)
        m = TwoTimescaleReset()
        draws = [sample_reset_time(m, rng) for _ in range(100000)]
        assert np.mean(draws) == pytest.approx(m.mean, rel=0.02)

    def test_single_exponential_mean(self):
        rng = np.random.default_rng(4)
        m = SingleExponentialReset(200e-9)
        draws = [sample_reset_time(m, rng) for _ in range(100000)]
        assert np.mean(draws) == pytest.approx(200e-9, rel=0.02)

    def test_degenerate_mixture_is_plain_exponential(self):
        m = TwoTimescaleReset(tau_fast=300e-9, tau_slow=300e-9)
        rng = np.random.default_rng(5)
        draws = [sample_reset_time(m, rng) for _ in range(50000)]
        assert np.mean(draws) == pytest.approx(300e-9, rel=0.03)
        assert np.std(draws) == pytest.approx(300e-9, rel=0.03)


class TestConfig:
    def test_alpha_sets_mw_probability(self):
        cfg = tiny_config(p_mw=None, alpha=math.pi / 2.0)
        assert cfg.p_mw == pytest.approx(0.5)

    def test_needs_alpha_or_p_mw(self):
        with pytest.raises(ValueError):
            tiny_config(p_mw=None)

    def test_probability_range_checked(self):
        with pytest.raises(ValueError):
            tiny_config(p_init=1.5)

    def test_echo_needs_room_for_reset(self):
        with pytest.raises(ValueError):
            tiny_config(
                echo_enabled=True,
                t_b=100e-9,
                reset_model=SingleExponentialReset(200e-9),
            )


class TestTrial:
    def test_error_free_trial_is_silent(self):
        cfg = tiny_config(p_init=0.0, p_mw=0.0, p_opt=0.0)
        rng = np.random.default_rng(7)
        assert all(run_trial(cfg, rng) == 0.0 for _ in range(200))

    def test_certain_mw_flip_no_echo(self):
        # s goes 0 -> -1 and stays; reset time is the only random part
        m = SingleExponentialReset(1e-12)
        cfg = tiny_config(p_init=0.0, p_mw=1.0, p_opt=0.0, reset_model=m)
        rng = np.random.default_rng(8)
        expected = -cfg.a_par * cfg.t_b
        for _ in range(50):
            # the picosecond reset tail still contributes ~1e-6 relative
            assert run_trial(cfg, rng) == pytest.approx(expected, rel=1e-4)

    def test_echo_cancels_mw_branch_dependence(self):
        m = SingleExponentialReset(1e-12)
        cfg = tiny_config(
            p_init=0.0, p_opt=0.0, p_echo=0.0, echo_enabled=True,
            t_b=2.4e-6, reset_model=m,
        )
        rng = np.random.default_rng(9)
        expected = -cfg.a_par * cfg.t_b / 2.0
        phases = [run_trial(cfg, rng) for _ in range(200)]
        assert np.allclose(phases, expected, rtol=1e-5)

    def test_trial_phase_bounded(self):
        cfg = tiny_config()
        rng = np.random.default_rng(10)
        bound = cfg.a_par * (cfg.t_a + cfg.t_b + 1e-4)
        assert all(abs(run_trial(cfg, rng)) < bound for _ in range(500))


class TestEnsemble:
    def test_matches_scalar_reference_exactly(self):
        cfg = tiny_config(n_trials=64, n_samples=5)
        parent = np.random.default_rng(21)
        curve = run_ensemble(cfg, parent)

        children = np.random.default_rng(21).spawn(cfg.n_samples)
        phases = np.empty((cfg.n_trials, cfg.n_samples))
        for k, child in enumerate(children):
            phases[:, k] = np.cumsum(
                [run_trial(cfg, child) for _ in range(cfg.n_trials)]
            )
        ref = curve_from_phases(phases)
        assert np.allclose(curve.fidelity, ref.fidelity, atol=1e-12)
        # the one-pass variance identity cancels catastrophically only when
        # the spread itself is ~1e-14; a relative check is the honest one
        assert np.allclose(curve.stderr, ref.stderr, rtol=0.02, atol=1e-12)

    def test_chunked_accumulation_seam(self):
        # trial count straddling the internal chunk edge must be seamless
        import qnetsim.dephasing as mod

        cfg = tiny_config(n_trials=10, n_samples=3)
        curve = run_ensemble(cfg, np.random.default_rng(33))
        original = mod._TRIAL_CHUNK
        mod._TRIAL_CHUNK = 4
        try:
            again = run_ensemble(cfg, np.random.default_rng(33))
        finally:
            mod._TRIAL_CHUNK = original
        assert np.allclose(curve.fidelity, again.fidelity, atol=1e-12)

    def test_noise_free_curve_is_unity(self):
        cfg = tiny_config(p_init=0.0, p_mw=0.0, p_opt=0.0, n_trials=200, n_samples=8)
        curve = run_ensemble(cfg, np.random.default_rng(12))
        assert np.all(curve.fidelity == 1.0)

    def test_fidelity_never_exceeds_one(self):
        cfg = tiny_config(n_trials=300, n_samples=16)
        curve = run_ensemble(cfg, np.random.default_rng(13))
        assert np.all(curve.fidelity <= 1.0 + 1e-12)
        assert np.all(curve.stderr >= 0.0)

    def test_reproducible_given_seed(self):
        cfg = tiny_config(n_trials=40, n_samples=6)
        a = run_ensemble(cfg, np.random.default_rng(14))
        b = run_ensemble(cfg, np.random.default_rng(14))
        assert np.array_equal(a.fidelity, b.fidelity)


class TestCurveReduction:
    def test_frame_shift_invariance(self):
        rng = np.random.default_rng(15)
        phases = np.cumsum(rng.normal(0.0, 0.2, size=(400, 60)), axis=0)
        base = curve_from_phases(phases)
        shifted = curve_from_phases(phases + 0.371 * np.arange(1, 401)[:, None])
        assert np.max(np.abs(base.fidelity - shifted.fidelity)) < 1e-12

    def test_gaussian_walk_decay_constant(self):
        # independent N(0, sigma^2) increments give <cos> = exp(-n sigma^2 / 2),
        # crossing 1/e at n = 2 / sigma^2
        rng = np.random.default_rng(16)
        sigma = 0.05
        phases = np.cumsum(rng.normal(0.0, sigma, size=(2000, 3000)), axis=0)
        n_1e = decay_constant(curve_from_phases(phases))
        assert n_1e == pytest.approx(2.0 / sigma**2, rel=0.1)

    def test_flat_curve_returns_sentinel(self):
        phases = np.zeros((50, 10))
        assert decay_constant(curve_from_phases(phases)) == math.inf

    def test_interpolation_between_indices(self):
        curve = curve_from_phases(np.zeros((3, 4)))
        # hand-build a curve dropping straight through the threshold
        object.__setattr__(curve, "fidelity", np.array([0.9, 0.75, 0.5]))
        n_1e = decay_constant(curve)
        c = 2 * curve.fidelity - 1
        expected = 2 + (c[1] - 1 / math.e) / (c[1] - c[2])
        assert n_1e == pytest.approx(expected)


class TestPresets:
    def test_preset_shapes(self):
        ne = no_echo_config(n_trials=10, n_samples=2)
        assert not ne.echo_enabled
        assert isinstance(ne.reset_model, TwoTimescaleReset)
        ec = echo_config(n_trials=10, n_samples=2)
        assert ec.echo_enabled
        assert ec.p_init == ec.p_echo == 0.01

    def test_short_horizon_fidelity_stays_high(self):
        cfg = no_echo_config(n_trials=2000, n_samples=200)
        curve = run_ensemble(cfg, np.random.default_rng(17))
        assert curve.fidelity[-1] > 0.99
