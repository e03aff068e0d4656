"""Baseline schemes to compare the entanglement setup against.

Two reference implementations, both with asymptotic (infinite) decoy
states so the single-photon contribution is known exactly:

* coherent-state BB84: Alice's source is a weak laser pulse with
  Poissonian photon number; only Bob's side has a quantum channel and
  detectors, so the whole channel loss sits on one arm.

* triggering PDC: the same PDC source sits at Alice, who heralds on her
  local detector and actively sets the polarization of each outgoing
  pulse.  Every photon of a multi-pair pulse therefore shares one
  polarization, which is what makes this scheme decoy-friendly and
  distinguishes it from the passive entanglement scheme.

The rate formula for both is the usual single-photon lower bound

    R >= q { -Q f H2(E) + Q1 [1 - H2(e1)] }.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import (
    DEFAULT_E_D,
    DEFAULT_Y0,
    ChannelScenario,
    SourceParams,
    overall_gain,
    pair_pmf,
    scenario_etas,
    scenario_setup,
)
from .rates import (
    SCHEME_COHERENT,
    SCHEME_TRIGGERING,
    PostprocessingConfig,
    RatePoint,
    binary_entropy,
)

__all__ = ["CoherentSetup", "coherent_decoy_rate", "triggering_pdc_decoy_rate"]


@dataclass(frozen=True)
class CoherentSetup:
    """Weak-coherent-pulse source parameters with the channel folded into eta_bob."""

    mu: float
    eta_bob: float
    y0: float = DEFAULT_Y0
    e_d: float = DEFAULT_E_D
    e0: float = 0.5

    def __post_init__(self) -> None:
        if self.mu < 0.0:
            raise ValueError(f"mu must be >= 0, got {self.mu}")
        if not (0.0 <= self.eta_bob <= 1.0):
            raise ValueError(f"eta_bob must lie in [0, 1], got {self.eta_bob}")
        if not (0.0 <= self.y0 <= 1.0):
            raise ValueError(f"y0 must lie in [0, 1], got {self.y0}")

    @classmethod
    def at_loss(
        cls,
        loss_db: float,
        mu: float,
        eta_intrinsic: float = 0.145,
        y0: float = DEFAULT_Y0,
        e_d: float = DEFAULT_E_D,
    ) -> "CoherentSetup":
        """Fold a total channel loss in dB onto Bob's intrinsic efficiency."""
        return cls(mu=mu, eta_bob=eta_intrinsic * 10.0 ** (-loss_db / 10.0), y0=y0, e_d=e_d)


def coherent_decoy_rate(
    cs: CoherentSetup, cfg: PostprocessingConfig = PostprocessingConfig(), loss_db: float = 0.0
) -> RatePoint:
    """Asymptotic-decoy GLLP rate of the coherent scheme at its given mu.

    Q_mu  = Y0 + 1 - exp(-eta mu)
    E_mu  = [e0 Y0 + e_d (1 - exp(-eta mu))] / Q_mu
    Y1    = Y0 + eta - Y0 eta
    Q1    = mu exp(-mu) Y1
    e1    = (e0 Y0 + e_d eta) / Y1

    loss_db only labels the returned point; the physics reads eta_bob.
    """
    eta = cs.eta_bob
    signal = -math.expm1(-eta * cs.mu)
    q_mu = cs.y0 + signal
    if q_mu == 0.0:
        return RatePoint(loss_db, SCHEME_COHERENT, cs.mu, 0.0, 0.0, 0.0, 0.0, 0, False, 0.0)
    e_mu = (cs.e0 * cs.y0 + cs.e_d * signal) / q_mu
    y1 = cs.y0 + eta - cs.y0 * eta
    if y1 > 0.0:
        q1 = cs.mu * math.exp(-cs.mu) * y1
        e1 = (cs.e0 * cs.y0 + cs.e_d * eta) / y1
        single = q1 * (1.0 - binary_entropy(e1))
    else:
        q1, e1, single = 0.0, 0.0, 0.0
    bracket = -q_mu * cfg.f_ec * binary_entropy(e_mu) + single
    if cfg.clamp_nonnegative and bracket < 0.0:
        bracket = 0.0
    return RatePoint(
        loss_db=loss_db,
        scheme=SCHEME_COHERENT,
        mu=cs.mu,
        gain=q_mu,
        qber=e_mu,
        delta_b=e_mu,
        delta_p=e1,
        bsteps=0,
        recurrence=False,
        rate=cfg.q * bracket,
    )


def _triggered_signal_gain(lam: float, eta_a: float, eta_b: float, y0a: float) -> float:
    """Probability that Alice triggers and Bob detects at least one signal photon.

    Sum over n of P(n) [1 - (1-y0A)(1-eta_A)^n] [1 - (1-eta_B)^n], via
    the generating function S(z) = sum P(n) z^n = 1/(1 + lam(1-z))^2:

        G = [1 - S(1-eta_B)] - (1-y0A) [S(1-eta_A) - S((1-eta_A)(1-eta_B))]

    rearranged so no term cancels at small eta.
    """
    b = eta_b * lam
    head = b * (2.0 + b) / (1.0 + b) ** 2
    u = 1.0 + eta_a * lam
    v = 1.0 + lam * (eta_a + eta_b - eta_a * eta_b)
    tail = lam * (1.0 - eta_a) * eta_b * (u + v) / (u * u * v * v)
    return head - (1.0 - y0a) * tail


def triggering_pdc_decoy_rate(
    src: SourceParams,
    scn: ChannelScenario,
    cfg: PostprocessingConfig = PostprocessingConfig(),
    e_d: float = DEFAULT_E_D,
) -> RatePoint:
    """Asymptotic-decoy rate of the heralded (triggering) PDC scheme.

    Gains reuse the coincidence algebra of the entanglement model (the
    trigger is just Alice's side click).  Errors are event-level: a
    Bob-side signal detection carries the misalignment error e_d, a
    background-only detection is random.
    """
    setup = scenario_setup(scn, e_d=e_d)
    eta_a, eta_b = scenario_etas(scn)
    lam = src.lam
    gain = overall_gain(src, setup)
    if gain == 0.0:
        return RatePoint(
            scn.total_loss_db, SCHEME_TRIGGERING, src.mean_pairs, 0.0, 0.0, 0.0, 0.0, 0, False, 0.0
        )
    g_signal = _triggered_signal_gain(lam, eta_a, eta_b, scn.y0_side)
    e_trig = setup.e0 - (setup.e0 - e_d) * g_signal / gain

    t1 = 1.0 - (1.0 - scn.y0_side) * (1.0 - eta_a)
    y1 = 1.0 - (1.0 - scn.y0_side) * (1.0 - eta_b)
    if y1 > 0.0:
        q1 = pair_pmf(1, src) * t1 * y1
        e1 = setup.e0 - (setup.e0 - e_d) * eta_b / y1
        single = q1 * (1.0 - binary_entropy(e1))
    else:
        q1, e1, single = 0.0, 0.0, 0.0
    bracket = -gain * cfg.f_ec * binary_entropy(e_trig) + single
    if cfg.clamp_nonnegative and bracket < 0.0:
        bracket = 0.0
    return RatePoint(
        loss_db=scn.total_loss_db,
        scheme=SCHEME_TRIGGERING,
        mu=src.mean_pairs,
        gain=gain,
        qber=e_trig,
        delta_b=e_trig,
        delta_p=e1,
        bsteps=0,
        recurrence=False,
        rate=cfg.q * bracket,
    )
