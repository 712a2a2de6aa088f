"""Tests for power adaptation, constraint calibration, and outage sweeps."""
import math

import numpy as np
import numpy.testing as npt
import pytest
from scipy.integrate import quad
from scipy.special import gammainc, gammaln

from mimo_dmt.channel import ChannelConfig, sample_channel
from mimo_dmt.simulate import (
    OutageSweep,
    PowerPolicy,
    adapted_power,
    calibrate_kappa,
    estimate_mean_power,
    outage_trial,
    run_sweep,
)

# Mean damped-eigenvalue-product weight E[prod b_n^{-t c_n}] for the 2x2
# channel estimate at t=0.9, rho=1e3, alpha=0.5 (so the per-entry variance
# is s = 1 + 1000^-0.5).  (checked independently: reduce the ordered-eigenvalue double
# integral by substituting b2 = b1(1+z) and integrating b1 analytically,
# then adaptive quadrature on z; two independent quadrature routes agree
# to 2e-14 relative.  The live recomputation below re-derives it.)
MEAN_WEIGHT_2X2_T09 = 16.97897080792607


def reduced_quadrature_mean_weight():
    s = 1.0 + 1000.0 ** -0.5
    integral, _ = quad(
        lambda z: z * z * (1 + z) ** -2.7 * (2 + z) ** -0.4,
        0.0, np.inf, limit=400, epsabs=0.0, epsrel=1e-10)
    return s ** -4.0 * math.gamma(0.4) * s ** 0.4 * integral


def scalar_mean_weight(m, t, sigma_sq):
    # N=1: b ~ Gamma(m, s), so E[b^{-t m}] = Gamma(m - t m)/Gamma(m) * s^{-t m}.
    s = 1.0 + sigma_sq
    return math.exp(gammaln(m - t * m) - gammaln(m)) * s ** (-t * m)


class TestPowerPolicy:
    def test_defaults(self):
        pol = PowerPolicy()
        assert pol.t == 0.9
        assert pol.kappa_mode == "calibrated"
        assert pol.kappa is None

    @pytest.mark.parametrize("t", [1.0, 1.5, -0.1])
    def test_rejects_bad_t(self, t):
        with pytest.raises(ValueError):
            PowerPolicy(t=t)

    def test_rejects_bad_mode(self):
        with pytest.raises(ValueError):
            PowerPolicy(kappa_mode="guessed")

    def test_rejects_nonpositive_kappa(self):
        with pytest.raises(ValueError):
            PowerPolicy(kappa=0.0)
        with pytest.raises(ValueError):
            PowerPolicy(kappa=-2.0)


class TestAdaptedPower:
    def test_t_zero_constant_power(self):
        cfg = ChannelConfig(3, 2, 0.5)
        pol = PowerPolicy(t=0.0, kappa=1.0)
        npt.assert_allclose(adapted_power(cfg, [0.3, 7.0], pol, 42.0), 42.0, rtol=1e-15)

    def test_single_antenna_value(self):
        # Weight 2n-1+M-N = 2 for (2,1): power = 1/4^(0.5*2) = 1/4.
        cfg = ChannelConfig(2, 1, 0.5)
        pol = PowerPolicy(t=0.5, kappa=1.0)
        npt.assert_allclose(adapted_power(cfg, [4.0], pol, 1.0), 0.25, rtol=1e-14)

    def test_unit_eigenvalues(self):
        cfg = ChannelConfig(2, 2, 0.5)
        pol = PowerPolicy(t=0.7, kappa=2.0)
        npt.assert_allclose(adapted_power(cfg, [1.0, 1.0], pol, 3.0), 6.0, rtol=1e-14)

    def test_general_value(self):
        # (2,2): weights (1,3); P = kappa*p_bar*(b1*b2^3)^(-t).
        cfg = ChannelConfig(2, 2, 0.1)
        pol = PowerPolicy(t=0.9, kappa=0.5)
        b = [0.7, 2.2]
        want = 0.5 * 10.0 * (0.7 * 2.2 ** 3) ** -0.9
        npt.assert_allclose(adapted_power(cfg, b, pol, 10.0), want, rtol=1e-13)

    def test_rejects_zero_eigenvalue(self):
        cfg = ChannelConfig(2, 2, 0.5)
        pol = PowerPolicy(t=0.5, kappa=1.0)
        with pytest.raises(ValueError):
            adapted_power(cfg, [0.0, 1.0], pol, 1.0)

    def test_rejects_descending(self):
        cfg = ChannelConfig(2, 2, 0.5)
        pol = PowerPolicy(t=0.5, kappa=1.0)
        with pytest.raises(ValueError):
            adapted_power(cfg, [2.0, 1.0], pol, 1.0)

    def test_requires_resolved_kappa(self):
        cfg = ChannelConfig(2, 2, 0.5)
        with pytest.raises(ValueError):
            adapted_power(cfg, [1.0, 2.0], PowerPolicy(t=0.5), 1.0)


class TestCalibrateKappa:
    def test_t_zero_exact_unity(self):
        # Constant power meets the average constraint with kappa = 1 exactly,
        # in both modes.
        cfg = ChannelConfig(2, 2, 0.5)
        for mode in ("analytic", "calibrated"):
            pol = PowerPolicy(t=0.0, kappa_mode=mode)
            assert calibrate_kappa(cfg, 1000.0, pol, batch=10_000, seed=1) == 1.0

    def test_analytic_formula(self):
        # kappa = xi_hat * prod[(2n-1+M-N)(1-t)] with
        # xi_hat = xi*(1+sigma_e^2)^(MN); (2,2): xi=1, weights (1,3).
        cfg = ChannelConfig(2, 2, 0.5)
        pol = PowerPolicy(t=0.9, kappa_mode="analytic")
        got = calibrate_kappa(cfg, 1000.0, pol, batch=10_000, seed=1)
        want = (1.0 * 0.1) * (3.0 * 0.1) * (1.0 + 1000.0 ** -0.5) ** 4
        npt.assert_allclose(got, want, rtol=1e-12)

    def test_calibrated_matches_quadrature(self):
        # 1/kappa estimates the mean damped weight; compare to the frozen
        # quadrature value and to a live independent recomputation.
        live = reduced_quadrature_mean_weight()
        npt.assert_allclose(live, MEAN_WEIGHT_2X2_T09, atol=1e-8)
        cfg = ChannelConfig(2, 2, 0.5)
        pol = PowerPolicy(t=0.9, kappa_mode="calibrated")
        kappa = calibrate_kappa(cfg, 1000.0, pol, batch=200_000, seed=7)
        npt.assert_allclose(1.0 / kappa, MEAN_WEIGHT_2X2_T09, rtol=0.02)

    @pytest.mark.parametrize(
        "m,t,rho,alpha",
        [(1, 0.5, 1e4, 1.0), (2, 0.9, 100.0, 0.3)],
    )
    def test_single_rx_closed_form(self, m, t, rho, alpha):
        # N=1: the importance-sampled estimator is exact (zero variance),
        # so kappa matches Gamma(m-tm)/Gamma(m)*(1+sigma^2)^(-tm) tightly.
        cfg = ChannelConfig(m, 1, alpha)
        pol = PowerPolicy(t=t, kappa_mode="calibrated")
        kappa = calibrate_kappa(cfg, rho, pol, batch=10_000, seed=3)
        want = 1.0 / scalar_mean_weight(m, t, rho ** -alpha)
        npt.assert_allclose(kappa, want, rtol=1e-10)

    def test_rejects_small_batch(self):
        cfg = ChannelConfig(2, 2, 0.5)
        with pytest.raises(ValueError):
            calibrate_kappa(cfg, 1000.0, PowerPolicy(), batch=5000, seed=1)

    def test_heavy_tail_warning_near_one(self):
        # t close to 1 thickens the weight tail; a small batch cannot meet
        # the convergence target and the achieved error is reported.
        cfg = ChannelConfig(2, 2, 0.5)
        pol = PowerPolicy(t=0.99, kappa_mode="calibrated")
        with pytest.warns(UserWarning, match="relative error"):
            calibrate_kappa(cfg, 1000.0, pol, batch=10_000, seed=5)


class TestMeanPowerValidation:
    def test_same_stream_identity(self):
        # Re-estimating on the calibration stream reproduces p_bar exactly.
        cfg = ChannelConfig(2, 2, 0.5)
        pol = PowerPolicy(t=0.9, kappa_mode="calibrated")
        kappa = calibrate_kappa(cfg, 1000.0, pol, batch=100_000, seed=9)
        resolved = PowerPolicy(t=0.9, kappa_mode="calibrated", kappa=kappa)
        mean_p = estimate_mean_power(cfg, 1000.0, resolved, batch=100_000, seed=9, stream=1)
        npt.assert_allclose(mean_p / 1000.0, 1.0, rtol=1e-12)

    def test_fresh_batch_scalar(self):
        # (1,1) example: fresh-batch mean within 0.5% (exact for N=1).
        cfg = ChannelConfig(1, 1, 1.0)
        pol = PowerPolicy(t=0.5, kappa_mode="calibrated")
        kappa = calibrate_kappa(cfg, 1e4, pol, batch=10_000, seed=21)
        resolved = PowerPolicy(t=0.5, kappa_mode="calibrated", kappa=kappa)
        mean_p = estimate_mean_power(cfg, 1e4, resolved, batch=10_000, seed=22)
        assert 0.995 <= mean_p / 1e4 <= 1.005

    def test_fresh_batch_two_by_two(self):
        # Power-constraint invariant at the default operating point.
        cfg = ChannelConfig(2, 2, 0.5)
        pol = PowerPolicy(t=0.9, kappa_mode="calibrated")
        kappa = calibrate_kappa(cfg, 1000.0, pol, batch=100_000, seed=31)
        resolved = PowerPolicy(t=0.9, kappa_mode="calibrated", kappa=kappa)
        mean_p = estimate_mean_power(cfg, 1000.0, resolved, batch=100_000, seed=32)
        assert 0.98 <= mean_p / 1000.0 <= 1.02

    def test_analytic_mode_within_factor_two(self):
        # The asymptotic constant lands within a factor of 2 at rho = 1e3.
        cfg = ChannelConfig(2, 2, 0.5)
        pol = PowerPolicy(t=0.9, kappa_mode="analytic")
        kappa = calibrate_kappa(cfg, 1000.0, pol, batch=10_000, seed=41)
        resolved = PowerPolicy(t=0.9, kappa_mode="analytic", kappa=kappa)
        mean_p = estimate_mean_power(cfg, 1000.0, resolved, batch=100_000, seed=42)
        assert 0.5 <= mean_p / 1000.0 <= 2.0


class TestOutageTrial:
    def test_zero_rate_never_in_outage(self):
        pol = PowerPolicy(t=0.0, kappa=1.0)
        for seed in (0, 1, 99):
            for m, n in [(1, 1), (2, 2), (3, 2)]:
                cfg = ChannelConfig(m, n, 0.5)
                assert outage_trial(cfg, 100.0, 0.0, pol, seed) is False

    def test_determinism(self):
        cfg = ChannelConfig(2, 2, 0.5)
        pol = PowerPolicy(t=0.0, kappa=1.0)
        results = {outage_trial(cfg, 10.0, 1.5, pol, 77) for _ in range(3)}
        assert len(results) == 1

    def test_scalar_matches_direct_computation(self):
        # White-box scalar check: outage iff log2(1 + rho*|h|^2) < r*log2(rho).
        cfg = ChannelConfig(1, 1, 0.0)
        pol = PowerPolicy(t=0.0, kappa=1.0)
        rho, r = 50.0, 0.5
        for seed in range(40):
            draw = sample_channel(cfg, rho, seed)
            a = abs(draw.h[0, 0]) ** 2
            want = math.log2(1 + rho * a) < r * math.log2(rho)
            assert outage_trial(cfg, rho, r, pol, seed) is want

    def test_requires_resolved_kappa(self):
        cfg = ChannelConfig(2, 2, 0.5)
        with pytest.raises(ValueError):
            outage_trial(cfg, 10.0, 1.0, PowerPolicy(t=0.9), 0)


class TestRunSweep:
    def test_simo_matches_closed_form(self):
        # (2,1), alpha=0, t=0: ||h||^2 is Gamma(2,1)-distributed, so
        # p_out = gammainc(2, 2(rho^r - 1)/rho).  Counts within 3 binomial
        # sigma; fitted slope within 0.1 of the slope fitted on the exact
        # probabilities.  (checked independently: scalar Rayleigh/Gamma outage oracle)
        cfg = ChannelConfig(2, 1, 0.0)
        pol = PowerPolicy(t=0.0, kappa=1.0)
        rho_grid = [10.0, 100.0, 1000.0]
        trials = 30_000
        sweep = run_sweep(cfg, 0.5, rho_grid, trials, pol, seed=11)
        exact = [float(gammainc(2, 2 * (r ** 0.5 - 1) / r)) for r in rho_grid]
        for p_hat, p in zip(sweep.p_out, exact):
            sigma = math.sqrt(p * (1 - p) / trials)
            assert abs(p_hat - p) <= 3 * sigma, (p_hat, p)
        exact_slope = np.polyfit(np.log(rho_grid), np.log(exact), 1)[0]
        assert abs(sweep.fitted_slope - exact_slope) <= 0.1

    def test_sweep_fields(self):
        cfg = ChannelConfig(2, 1, 0.0)
        pol = PowerPolicy(t=0.0, kappa=1.0)
        sweep = run_sweep(cfg, 0.5, [10.0, 1000.0], 2000, pol, seed=1)
        assert isinstance(sweep, OutageSweep)
        assert sweep.trials == 2000
        assert sweep.r == 0.5
        assert len(sweep.p_out) == len(sweep.rho_grid) == len(sweep.ci_half_width) == 2
        assert all(0.0 <= p <= 1.0 for p in sweep.p_out)
        for p, ci in zip(sweep.p_out, sweep.ci_half_width):
            npt.assert_allclose(ci, 1.96 * math.sqrt(p * (1 - p) / 2000), rtol=1e-12)

    def test_zero_rate_flags_undefined_slope(self):
        cfg = ChannelConfig(2, 1, 0.0)
        pol = PowerPolicy(t=0.0, kappa=1.0)
        sweep = run_sweep(cfg, 0.0, [10.0, 1000.0], 2000, pol, seed=1)
        assert sweep.p_out == [0.0, 0.0]
        assert math.isnan(sweep.fitted_slope)

    def test_partition_invariance(self):
        # Same seed, different worker counts: bit-identical results.
        cfg = ChannelConfig(2, 2, 0.5)
        pol = PowerPolicy(t=0.9, kappa_mode="calibrated")
        a = run_sweep(cfg, 1.0, [10.0, 1000.0], 5000, pol, seed=13, workers=1)
        b = run_sweep(cfg, 1.0, [10.0, 1000.0], 5000, pol, seed=13, workers=3)
        assert a.p_out == b.p_out
        assert a.fitted_slope == b.fitted_slope or (
            math.isnan(a.fitted_slope) and math.isnan(b.fitted_slope))

    def test_monotone_in_rho(self):
        cfg = ChannelConfig(2, 1, 0.3)
        pol = PowerPolicy(t=0.0, kappa=1.0)
        sweep = run_sweep(cfg, 0.6, [10.0, 100.0, 1000.0], 20_000, pol, seed=17)
        for i in range(len(sweep.p_out) - 1):
            slack = sweep.ci_half_width[i] + sweep.ci_half_width[i + 1]
            assert sweep.p_out[i + 1] <= sweep.p_out[i] + slack

    def test_monotone_in_rate(self):
        cfg = ChannelConfig(2, 1, 0.0)
        pol = PowerPolicy(t=0.0, kappa=1.0)
        lo = run_sweep(cfg, 0.3, [10.0, 1000.0], 20_000, pol, seed=19)
        hi = run_sweep(cfg, 0.6, [10.0, 1000.0], 20_000, pol, seed=19)
        for p_lo, p_hi, ci in zip(lo.p_out, hi.p_out, lo.ci_half_width):
            assert p_hi >= p_lo - ci

    def test_quality_ordering_of_slopes(self):
        # Better feedback gives a steeper (more negative) outage slope.
        cfg0 = ChannelConfig(2, 1, 0.0)
        cfg5 = ChannelConfig(2, 1, 0.5)
        pol = PowerPolicy(t=0.9, kappa_mode="calibrated")
        rho_grid = [10.0, 1000.0, 100_000.0]
        s0 = run_sweep(cfg0, 0.5, rho_grid, 100_000, pol, seed=23)
        s5 = run_sweep(cfg5, 0.5, rho_grid, 100_000, pol, seed=23)
        assert s5.fitted_slope <= s0.fitted_slope + 0.15

    def test_rejects_few_trials(self):
        cfg = ChannelConfig(2, 1, 0.0)
        with pytest.raises(ValueError):
            run_sweep(cfg, 0.5, [10.0, 1000.0], 500, PowerPolicy(t=0.0, kappa=1.0), seed=1)

    def test_rejects_narrow_grid(self):
        cfg = ChannelConfig(2, 1, 0.0)
        with pytest.raises(ValueError):
            run_sweep(cfg, 0.5, [10.0, 50.0], 2000, PowerPolicy(t=0.0, kappa=1.0), seed=1)
