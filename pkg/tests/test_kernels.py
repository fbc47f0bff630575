"""Kernel responses, the logistic nonlinearity, support horizons and the
nonlinear leaky recurrence."""

import math

import numpy as np
import pytest

from skim.kernels import (
    FAMILY_CATALOG,
    KernelFamily,
    KernelKind,
    KernelSpec,
    eval_response,
    leak_constant,
    logistic,
    response_support,
    response_table,
    step_leaky,
)


def alpha_spec(tau=100.0):
    return KernelSpec(kind=KernelKind.ALPHA, tau=tau)


class TestLogistic:
    def test_zero_input_is_exactly_zero(self):
        assert logistic(0.0, 5.0) == 0.0

    def test_saturation(self):
        assert abs(logistic(100.0, 5.0) - 0.5) < 1e-12
        assert abs(logistic(-100.0, 5.0) + 0.5) < 1e-12

    def test_closed_form_value(self):
        # 1/(1+e^-5) - 0.5, evaluated independently
        assert logistic(1.0, 5.0) == pytest.approx(0.49330714907571527, abs=1e-15)

    def test_odd_symmetry(self):
        u = np.linspace(-20, 20, 401)
        np.testing.assert_allclose(logistic(u, 5.0), -logistic(-u, 5.0), atol=1e-15)

    def test_strictly_increasing_and_bounded(self):
        # strict increase is testable while 5*u stays inside the float64
        # window where successive values remain resolvable (|5u| < ~25)
        u = np.linspace(-5, 5, 501)
        v = logistic(u, 5.0)
        assert np.all(np.diff(v) > 0)
        u_wide = np.linspace(-1000, 1000, 999)
        assert np.all(np.abs(logistic(u_wide, 5.0)) <= 0.5)
        assert np.all(np.abs(logistic(u, 5.0)) < 0.5)

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            logistic(np.nan, 5.0)
        with pytest.raises(ValueError):
            logistic(np.inf, 5.0)
        with pytest.raises(ValueError):
            logistic(1.0, 0.0)


class TestEvalResponse:
    def test_alpha_peak(self):
        assert eval_response(alpha_spec(100.0), 100.0) == pytest.approx(
            math.exp(-1.0), abs=1e-12
        )

    def test_alpha_closed_form(self):
        # (200/100) e^-2
        assert eval_response(alpha_spec(100.0), 200.0) == pytest.approx(
            0.2706705664732254, abs=1e-15
        )

    def test_delayed_alpha_is_causal(self):
        spec = KernelSpec(kind=KernelKind.DELAYED_ALPHA, delta_t=50.0, tau=100.0)
        assert eval_response(spec, 30.0) == 0.0
        assert eval_response(spec, 50.0) == 0.0
        assert eval_response(spec, 150.0) == pytest.approx(
            math.exp(-1.0), abs=1e-12
        )

    def test_delayed_gaussian_peak(self):
        spec = KernelSpec(kind=KernelKind.DELAYED_GAUSSIAN, delta_t=100.0, sigma=10.0)
        assert eval_response(spec, 100.0) == pytest.approx(
            0.039894228040143274, abs=1e-15
        )

    def test_damped_resonance_form(self):
        spec = KernelSpec(kind=KernelKind.DAMPED_RESONANCE, tau=50.0, omega=0.1)
        dt = 37.0
        expected = math.exp(-dt / 50.0) * math.sin(0.1 * dt)
        assert eval_response(spec, dt) == pytest.approx(expected, abs=1e-15)

    def test_custom_table_lookup(self):
        spec = KernelSpec(kind=KernelKind.CUSTOM, custom_table=(0.5, -0.25, 0.125))
        assert eval_response(spec, 0.0) == 0.5
        assert eval_response(spec, 1.0) == -0.25
        assert eval_response(spec, 2.9) == 0.125
        assert eval_response(spec, 3.0) == 0.0
        assert eval_response(spec, 1000.0) == 0.0

    def test_leaky_kind_is_a_misuse(self):
        spec = KernelSpec(kind=KernelKind.LEAKY_INTEGRATOR_NL, tau=20.0)
        with pytest.raises(ValueError):
            eval_response(spec, 1.0)

    def test_negative_dt_rejected(self):
        with pytest.raises(ValueError):
            eval_response(alpha_spec(), -1.0)

    def test_alpha_argmax_by_dense_scan(self):
        # unique maximum at dt = delta_t + tau with value 1/e
        for delta_t, tau in [(0.0, 100.0), (0.0, 37.0), (50.0, 80.0)]:
            if delta_t:
                spec = KernelSpec(
                    kind=KernelKind.DELAYED_ALPHA, delta_t=delta_t, tau=tau
                )
            else:
                spec = alpha_spec(tau)
            dts = np.arange(0, 10 * (delta_t + tau), 1.0)
            values = eval_response(spec, dts)
            assert np.all(values >= 0)
            peak_at = dts[np.argmax(values)]
            assert abs(peak_at - (delta_t + tau)) <= 1.0
            assert values.max() == pytest.approx(math.exp(-1.0), abs=1e-9)

    def test_damped_resonance_zeros(self):
        spec = KernelSpec(kind=KernelKind.DAMPED_RESONANCE, tau=50.0, omega=0.07)
        for n in range(6):
            dt = n * math.pi / 0.07
            assert abs(eval_response(spec, dt)) < 1e-9


class TestResponseSupport:
    def test_epsilon_above_peak_gives_zero_horizon(self):
        assert response_support(alpha_spec(100.0), epsilon=0.5) == 0

    def test_gaussian_support_matches_analytic_tail(self):
        spec = KernelSpec(kind=KernelKind.DELAYED_GAUSSIAN, delta_t=100.0, sigma=10.0)
        horizon = response_support(spec, epsilon=1e-12)
        peak = 1.0 / (10.0 * math.sqrt(2.0 * math.pi))
        analytic = 100.0 + 10.0 * math.sqrt(2.0 * math.log(peak / 1e-12))
        assert horizon == 170  # frozen from an integer scan of the tail
        assert abs(horizon - analytic) <= 2.0

    def test_custom_support_bounded_by_table(self):
        table = tuple(0.9 ** i for i in range(300))
        spec = KernelSpec(kind=KernelKind.CUSTOM, custom_table=table)
        assert response_support(spec, epsilon=1e-30) <= 300

    @pytest.mark.parametrize(
        "spec",
        [
            alpha_spec(63.0),
            KernelSpec(kind=KernelKind.DAMPED_RESONANCE, tau=40.0, omega=0.09),
            KernelSpec(kind=KernelKind.DELAYED_ALPHA, delta_t=30.0, tau=25.0),
            KernelSpec(kind=KernelKind.DELAYED_GAUSSIAN, delta_t=80.0, sigma=7.0),
        ],
    )
    def test_everything_beyond_horizon_is_small(self, spec):
        epsilon = 1e-6
        horizon = response_support(spec, epsilon)
        dts = np.arange(horizon, 10 * max(horizon, 1), 1.0)
        assert np.all(np.abs(eval_response(spec, dts)) < epsilon)

    def test_rejects_nonpositive_epsilon(self):
        with pytest.raises(ValueError):
            response_support(alpha_spec(), epsilon=0.0)

    def test_table_matches_pointwise_response(self):
        spec = alpha_spec(40.0)
        table = response_table(spec, 1e-6)
        np.testing.assert_allclose(
            table, eval_response(spec, np.arange(len(table), dtype=float))
        )


class TestStepLeaky:
    def test_rest_is_a_fixed_point(self):
        assert step_leaky(0.0, 0.0, 0.9) == 0.0

    def test_leak_vanishes_at_zero_state(self):
        assert step_leaky(0.0, 0.5, 0.9) == 0.5

    def test_hand_evaluated_step(self):
        # 0.9 * 1 / (1 + 1) = 0.45
        assert step_leaky(1.0, 0.0, 0.9) == pytest.approx(0.45, abs=1e-15)

    @pytest.mark.parametrize("start", [0.1, -0.1, 1.0, -1.0, 10.0, -10.0])
    def test_zero_input_decays_to_rest(self, start):
        state = start
        peak = abs(start)
        for _ in range(10_000):
            state = step_leaky(state, 0.0, 0.9)
            peak = max(peak, abs(state))
        assert abs(state) < 1e-12
        assert peak <= max(abs(start), 0.5)  # bounded orbit

    def test_contraction_for_large_state(self):
        for start in [1.0, -2.0, 7.5]:
            nxt = step_leaky(start, 0.0, 0.9)
            assert abs(nxt) <= 0.9 * abs(start)

    def test_leak_outside_unit_interval_rejected(self):
        with pytest.raises(ValueError):
            step_leaky(0.0, 0.0, 1.0)
        with pytest.raises(ValueError):
            step_leaky(0.0, 0.0, 0.0)
        with pytest.raises(ValueError):
            step_leaky(np.nan, 0.0, 0.5)


class TestKernelSpecValidation:
    def test_tau_required_positive(self):
        with pytest.raises(ValueError):
            KernelSpec(kind=KernelKind.ALPHA, tau=0.0)
        with pytest.raises(ValueError):
            KernelSpec(kind=KernelKind.LEAKY_INTEGRATOR_NL, tau=-1.0)

    def test_omega_and_sigma_requirements(self):
        with pytest.raises(ValueError):
            KernelSpec(kind=KernelKind.DAMPED_RESONANCE, tau=10.0, omega=0.0)
        with pytest.raises(ValueError):
            KernelSpec(kind=KernelKind.DELAYED_GAUSSIAN, delta_t=10.0, sigma=0.0)

    def test_custom_table_must_be_finite(self):
        with pytest.raises(ValueError):
            KernelSpec(kind=KernelKind.CUSTOM, custom_table=(1.0, np.inf))
        with pytest.raises(ValueError):
            KernelSpec(kind=KernelKind.CUSTOM, custom_table=())
        with pytest.raises(ValueError):
            KernelSpec(kind=KernelKind.CUSTOM)

    def test_nonmonotonic_custom_table_is_fine(self):
        table = tuple(math.sin(0.3 * i) * 0.8 ** i for i in range(40))
        spec = KernelSpec(kind=KernelKind.CUSTOM, custom_table=table)
        assert eval_response(spec, 7.0) == table[7]

    def test_gain_positive(self):
        with pytest.raises(ValueError):
            KernelSpec(kind=KernelKind.ALPHA, tau=1.0, logistic_gain=0.0)

    def test_leak_constant_mapping(self):
        spec = KernelSpec(kind=KernelKind.LEAKY_INTEGRATOR_NL, tau=20.0)
        assert leak_constant(spec) == pytest.approx(math.exp(-1.0 / 20.0))
        with pytest.raises(ValueError):
            leak_constant(alpha_spec())


class TestKernelFamily:
    def test_sampling_is_deterministic(self):
        family = FAMILY_CATALOG["alpha"]
        a = [family.sample(np.random.default_rng(9)) for _ in range(5)]
        b = [family.sample(np.random.default_rng(9)) for _ in range(5)]
        assert a == b

    def test_ranges_are_respected(self):
        family = KernelFamily(
            kind=KernelKind.DELAYED_ALPHA, delta_t=(10.0, 20.0), tau=(1.0, 2.0)
        )
        rng = np.random.default_rng(0)
        for _ in range(100):
            spec = family.sample(rng)
            assert 10.0 <= spec.delta_t <= 20.0
            assert 1.0 <= spec.tau <= 2.0

    def test_fixed_parameters_pass_through(self):
        family = KernelFamily(kind=KernelKind.ALPHA, tau=63.2, logistic_gain=5.0)
        spec = family.sample(np.random.default_rng(0))
        assert spec.tau == 63.2
        assert spec.logistic_gain == 5.0

    def test_bad_range_rejected_at_sampling(self):
        family = KernelFamily(kind=KernelKind.ALPHA, tau=(5.0, 5.0))
        with pytest.raises(ValueError):
            family.sample(np.random.default_rng(0))
