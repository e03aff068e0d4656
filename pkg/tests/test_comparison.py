"""Tests for the decoy-state baseline schemes."""

import math

import pytest

from pdcqkd.comparison import (
    CoherentSetup,
    _triggered_signal_gain,
    coherent_decoy_rate,
    triggering_pdc_decoy_rate,
)
from pdcqkd.model import (
    ChannelScenario,
    Placement,
    SourceParams,
    overall_gain,
    pair_pmf,
    scenario_setup,
)
from pdcqkd.rates import (
    SCHEME_COHERENT,
    SCHEME_TRIGGERING,
    PostprocessingConfig,
    binary_entropy,
)


def series_triggered_gain(lam, eta_a, eta_b, y0a, n_max=4000):
    """Direct summation oracle for the trigger-and-signal probability."""
    src = SourceParams(lam=lam)
    terms = []
    for n in range(1, n_max + 1):
        p = pair_pmf(n, src)
        trig = 1.0 - (1.0 - y0a) * (1.0 - eta_a) ** n
        sig = 1.0 - (1.0 - eta_b) ** n
        terms.append(p * trig * sig)
        if p < 1e-18 and n > 20:
            break
    return math.fsum(terms)


class TestCoherentScheme:
    def test_matches_direct_formula(self):
        cs = CoherentSetup(mu=0.5, eta_bob=0.145 * 10 ** (-1.5), y0=6.02e-6, e_d=0.015)
        cfg = PostprocessingConfig()
        pt = coherent_decoy_rate(cs, cfg, loss_db=15.0)

        eta = cs.eta_bob
        q_mu = cs.y0 + 1.0 - math.exp(-eta * cs.mu)
        e_mu = (0.5 * cs.y0 + cs.e_d * (1.0 - math.exp(-eta * cs.mu))) / q_mu
        y1 = cs.y0 + eta - cs.y0 * eta
        q1 = cs.mu * math.exp(-cs.mu) * y1
        e1 = (0.5 * cs.y0 + cs.e_d * eta) / y1
        rate = 0.5 * (-q_mu * 1.22 * binary_entropy(e_mu) + q1 * (1.0 - binary_entropy(e1)))

        assert pt.gain == pytest.approx(q_mu, rel=1e-12)
        assert pt.qber == pytest.approx(e_mu, rel=1e-12)
        assert pt.delta_p == pytest.approx(e1, rel=1e-12)
        assert pt.rate == pytest.approx(rate, rel=1e-12)
        assert pt.scheme == SCHEME_COHERENT
        assert pt.loss_db == 15.0

    def test_lossless_clean_limit_rate_is_q_mu_exp(self):
        # eta = 1, no background, no misalignment: every term but the
        # single-photon credit vanishes and R = q mu e^{-mu}.
        for mu in (1e-6, 0.1, 0.5):
            cs = CoherentSetup(mu=mu, eta_bob=1.0, y0=0.0, e_d=0.0)
            pt = coherent_decoy_rate(cs)
            assert pt.rate == pytest.approx(0.5 * mu * math.exp(-mu), rel=1e-9)

    def test_clean_single_photon_error_is_zero(self):
        cs = CoherentSetup(mu=0.2, eta_bob=0.01, y0=0.0, e_d=0.0)
        pt = coherent_decoy_rate(cs)
        assert pt.delta_p == 0.0
        assert pt.qber == 0.0

    def test_rate_decreases_with_loss(self):
        cfg = PostprocessingConfig()
        rates = [
            coherent_decoy_rate(CoherentSetup.at_loss(db, mu=0.5), cfg, loss_db=db).rate
            for db in (0.0, 10.0, 20.0)
        ]
        assert rates[0] > rates[1] > rates[2] > 0.0

    def test_clamps_to_zero_when_error_correction_dominates(self):
        # Huge mu: the multi-photon fraction eats the single-photon credit.
        cs = CoherentSetup.at_loss(30.0, mu=20.0)
        pt = coherent_decoy_rate(cs)
        assert pt.rate == 0.0

    def test_unclamped_rate_can_go_negative(self):
        cs = CoherentSetup.at_loss(30.0, mu=20.0)
        pt = coherent_decoy_rate(cs, PostprocessingConfig(clamp_nonnegative=False))
        assert pt.rate < 0.0

    def test_zero_gain_returns_zero_point(self):
        pt = coherent_decoy_rate(CoherentSetup(mu=0.0, eta_bob=0.5, y0=0.0))
        assert pt.rate == 0.0 and pt.gain == 0.0

    def test_validation(self):
        with pytest.raises(ValueError):
            CoherentSetup(mu=-0.1, eta_bob=0.5)
        with pytest.raises(ValueError):
            CoherentSetup(mu=0.1, eta_bob=1.5)


class TestTriggeredSignalGain:
    @pytest.mark.parametrize("lam", [1e-3, 0.0265, 0.1, 0.5])
    @pytest.mark.parametrize("loss_db", [0.0, 10.0, 30.0])
    @pytest.mark.parametrize("y0a", [0.0, 6.02e-6, 1e-3])
    def test_matches_series(self, lam, loss_db, y0a):
        eta_a = 0.145
        eta_b = 0.145 * 10 ** (-loss_db / 10.0)
        closed = _triggered_signal_gain(lam, eta_a, eta_b, y0a)
        series = series_triggered_gain(lam, eta_a, eta_b, y0a)
        assert closed == pytest.approx(series, rel=1e-11)

    def test_bounded_by_coincidence_gain(self):
        # Bob seeing a signal photon implies Bob clicked, so this gain
        # can never exceed the full coincidence probability.
        src = SourceParams(lam=0.1)
        scn = ChannelScenario(Placement.AT_ALICE, total_loss_db=12.0)
        setup = scenario_setup(scn)
        g = _triggered_signal_gain(0.1, setup.alice.eta, setup.bob.eta, setup.alice.y0)
        assert 0.0 < g <= overall_gain(src, setup)


class TestTriggeringScheme:
    def test_perfect_trigger_gives_misalignment_qber(self):
        # eta_A = 1 and no background: every pulse triggers and every
        # Bob click is a signal photon, so the QBER is exactly e_d.
        scn = ChannelScenario(
            Placement.AT_ALICE, total_loss_db=13.0, eta_alice_intrinsic=1.0, y0_side=0.0
        )
        pt = triggering_pdc_decoy_rate(SourceParams(lam=0.1), scn, e_d=0.015)
        assert pt.qber == pytest.approx(0.015, abs=1e-12)
        assert pt.delta_p == pytest.approx(0.015, abs=1e-12)

    def test_small_lambda_qber_approaches_misalignment(self):
        scn = ChannelScenario(Placement.AT_ALICE, total_loss_db=10.0, y0_side=0.0)
        pt = triggering_pdc_decoy_rate(SourceParams(lam=1e-7), scn, e_d=0.015)
        assert pt.qber == pytest.approx(0.015, rel=1e-4)

    def test_gain_is_coincidence_probability(self):
        src = SourceParams(lam=0.0265)
        scn = ChannelScenario(Placement.AT_ALICE, total_loss_db=20.0)
        pt = triggering_pdc_decoy_rate(src, scn)
        assert pt.gain == overall_gain(src, scenario_setup(scn))

    def test_matches_direct_formula(self):
        src = SourceParams(lam=0.12)
        scn = ChannelScenario(Placement.AT_ALICE, total_loss_db=18.0)
        cfg = PostprocessingConfig()
        pt = triggering_pdc_decoy_rate(src, scn, cfg, e_d=0.02)

        setup = scenario_setup(scn, e_d=0.02)
        eta_a, eta_b = setup.alice.eta, setup.bob.eta
        q = overall_gain(src, setup)
        g = series_triggered_gain(src.lam, eta_a, eta_b, scn.y0_side)
        e_trig = 0.5 - (0.5 - 0.02) * g / q
        t1 = 1.0 - (1.0 - scn.y0_side) * (1.0 - eta_a)
        y1 = 1.0 - (1.0 - scn.y0_side) * (1.0 - eta_b)
        q1 = pair_pmf(1, src) * t1 * y1
        e1 = 0.5 - (0.5 - 0.02) * eta_b / y1
        rate = 0.5 * (-q * 1.22 * binary_entropy(e_trig) + q1 * (1.0 - binary_entropy(e1)))

        assert pt.qber == pytest.approx(e_trig, rel=1e-10)
        assert pt.rate == pytest.approx(rate, rel=1e-10)
        assert pt.scheme == SCHEME_TRIGGERING
        assert pt.mu == pytest.approx(2 * 0.12)

    def test_qber_between_misalignment_and_half(self):
        for lam in (0.01, 0.1, 0.5):
            for db in (0.0, 15.0, 30.0):
                scn = ChannelScenario(Placement.AT_ALICE, total_loss_db=db)
                pt = triggering_pdc_decoy_rate(SourceParams(lam=lam), scn, e_d=0.015)
                assert 0.015 <= pt.qber <= 0.5

    def test_rate_decreases_with_loss_then_dies(self):
        src = SourceParams(lam=0.05)
        rates = []
        for db in (0.0, 10.0, 20.0, 60.0):
            scn = ChannelScenario(Placement.AT_ALICE, total_loss_db=db)
            rates.append(triggering_pdc_decoy_rate(src, scn).rate)
        assert rates[0] > rates[1] > rates[2] > 0.0
        assert rates[3] == 0.0
