"""Finite-data-size penalty on the phase error estimate.

With a finite number of pump pulses the phase error rate is only
estimated, not measured: the bit error rate comes for free out of error
correction (so it carries no fluctuation), while the phase error rate
may exceed it by a bias eps.  The probability of a bias of eps or more
falls off as

    P_eps <= exp(-eps^2 n / (4 delta_b (1 - delta_b))),

with n the number of detection events.  Fixing a confidence exponent s
(P_eps = e^-s) and inverting at equality gives the bias the privacy
amplification must assume.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import DEFAULT_E_D, ChannelScenario, SourceParams, overall_gain, overall_qber, scenario_setup
from .rates import PostprocessingConfig, RatePoint, placement_scheme
from .twoway import twoway_rate_from_errors

__all__ = ["FluctuationParams", "phase_bias", "finite_key_rate"]


@dataclass(frozen=True)
class FluctuationParams:
    """Data size N, confidence exponent s, and the reporting cutoff."""

    n_pulses: float = 1.5e11
    confidence_exponent: float = 50.0
    rate_cutoff: float = 1e-10

    def __post_init__(self) -> None:
        if self.n_pulses < 1:
            raise ValueError(f"n_pulses must be >= 1, got {self.n_pulses}")
        if not (self.confidence_exponent > 0):
            raise ValueError(
                f"confidence_exponent must be > 0, got {self.confidence_exponent}"
            )
        if self.rate_cutoff < 0:
            raise ValueError(f"rate_cutoff must be >= 0, got {self.rate_cutoff}")


def phase_bias(n_detections: float, delta_b: float, s: float) -> float:
    """Bias eps with P_eps = e^-s at n detection events.

    eps = sqrt(4 delta_b (1 - delta_b) s / n).
    """
    if n_detections <= 0:
        raise ValueError(f"n_detections must be > 0, got {n_detections}")
    if not 0.0 <= delta_b <= 0.5:
        raise ValueError(f"delta_b must lie in [0, 1/2], got {delta_b}")
    return math.sqrt(4.0 * delta_b * (1.0 - delta_b) * s / n_detections)


def finite_key_rate(
    src: SourceParams,
    scn: ChannelScenario,
    cfg: PostprocessingConfig = PostprocessingConfig(),
    flc: FluctuationParams = FluctuationParams(),
    bsteps: int = 0,
    recurrence: bool = False,
    e_d: float = DEFAULT_E_D,
) -> RatePoint:
    """Key rate with the finite-size phase bias applied.

    delta_b = QBER (no bit-error fluctuation), delta_p = min(1/2,
    delta_b + eps) evaluated before any B-step evolution, since the
    bias afflicts the initial phase error estimate.  The returned rate
    is not cutoff-filtered; rate_cutoff is applied by the reporting
    layer.
    """
    setup = scenario_setup(scn, e_d=e_d)
    scheme = placement_scheme(scn.placement)
    gain = overall_gain(src, setup)
    if gain == 0.0:
        return RatePoint(
            loss_db=scn.total_loss_db,
            scheme=scheme,
            mu=src.mean_pairs,
            gain=0.0,
            qber=0.0,
            delta_b=0.0,
            delta_p=0.0,
            bsteps=bsteps,
            recurrence=recurrence,
            rate=0.0,
        )
    e, _ = overall_qber(src, setup)
    n = flc.n_pulses * gain
    eps = phase_bias(n, e, flc.confidence_exponent)
    delta_p0 = min(0.5, e + eps)
    rate, db, dp = twoway_rate_from_errors(gain, e, delta_p0, cfg, bsteps, recurrence)
    return RatePoint(
        loss_db=scn.total_loss_db,
        scheme=scheme,
        mu=src.mean_pairs,
        gain=gain,
        qber=e,
        delta_b=db,
        delta_p=dp,
        bsteps=bsteps,
        recurrence=recurrence,
        rate=rate,
    )
