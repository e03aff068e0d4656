"""One-way secure key rate for the PDC model.

The rate bound for a basis-independent source is

    R >= q * Q * [1 - f * H2(delta_b) - H2(delta_p)],

with q the basis reconciliation factor, Q the gain, f the error
correction inefficiency, and delta_b / delta_p the bit and phase error
rates.  For symmetric X/Z measurement both deltas equal the overall
QBER in the asymptotic limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import (
    DEFAULT_E_D,
    ChannelScenario,
    Placement,
    SourceParams,
    overall_gain,
    overall_qber,
    scenario_setup,
)

__all__ = [
    "SCHEME_ENT_MIDDLE",
    "SCHEME_ENT_ALICE",
    "SCHEME_COHERENT",
    "SCHEME_TRIGGERING",
    "placement_scheme",
    "PostprocessingConfig",
    "RatePoint",
    "binary_entropy",
    "kp_rate",
    "one_way_key_rate",
]

# Scheme labels as they appear in sweep output.
SCHEME_ENT_MIDDLE = "entanglement-middle"
SCHEME_ENT_ALICE = "entanglement-alice"
SCHEME_COHERENT = "coherent-decoy"
SCHEME_TRIGGERING = "triggering-decoy"


def placement_scheme(placement: Placement) -> str:
    if placement is Placement.MIDDLE:
        return SCHEME_ENT_MIDDLE
    return SCHEME_ENT_ALICE


@dataclass(frozen=True)
class PostprocessingConfig:
    """Classical post-processing parameters.

    q: basis reconciliation factor (1/2 for plain BB84 sifting).
    f_ec: error correction inefficiency relative to the Shannon limit,
        treated as a constant.
    clamp_nonnegative: report negative rate brackets as zero.  Turn off
        to keep signed values, which is what the cutoff root-finding
        wants.
    """

    q: float = 0.5
    f_ec: float = 1.22
    clamp_nonnegative: bool = True

    def __post_init__(self) -> None:
        if not (0.0 < self.q <= 1.0):
            raise ValueError(f"q must lie in (0, 1], got {self.q}")
        if self.f_ec < 1.0:
            raise ValueError(f"f_ec must be >= 1, got {self.f_ec}")


@dataclass(frozen=True)
class RatePoint:
    """One evaluated operating point of a sweep.

    delta_b and delta_p are the error rates the privacy amplification
    actually used: equal to the QBER for plain one-way processing, the
    evolved values after B steps, or the fluctuation-biased phase error
    in finite-key mode.
    """

    loss_db: float
    scheme: str
    mu: float
    gain: float
    qber: float
    delta_b: float
    delta_p: float
    bsteps: int
    recurrence: bool
    rate: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.rate):
            raise ValueError(f"rate must be finite, got {self.rate}")


def binary_entropy(x: float) -> float:
    """H2(x) = -x log2 x - (1-x) log2 (1-x), with H2(0) = H2(1) = 0."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"binary_entropy needs x in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def kp_rate(gain: float, delta_b: float, delta_p: float, cfg: PostprocessingConfig) -> float:
    """q * gain * [1 - f*H2(delta_b) - H2(delta_p)], clamped per cfg."""
    bracket = 1.0 - cfg.f_ec * binary_entropy(delta_b) - binary_entropy(delta_p)
    if cfg.clamp_nonnegative and bracket < 0.0:
        bracket = 0.0
    return cfg.q * gain * bracket


def one_way_key_rate(
    src: SourceParams,
    scn: ChannelScenario,
    cfg: PostprocessingConfig = PostprocessingConfig(),
    e_d: float = DEFAULT_E_D,
    e0: float = 0.5,
) -> RatePoint:
    """Asymptotic one-way rate of the entanglement scheme at one loss point.

    Uses delta_b = delta_p = QBER.  A zero-gain operating point (dark
    source, no background) reports a zero rate rather than failing.
    """
    setup = scenario_setup(scn, e_d=e_d, e0=e0)
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
            bsteps=0,
            recurrence=False,
            rate=0.0,
        )
    e, _ = overall_qber(src, setup)
    rate = kp_rate(gain, e, e, cfg)
    return RatePoint(
        loss_db=scn.total_loss_db,
        scheme=scheme,
        mu=src.mean_pairs,
        gain=gain,
        qber=e,
        delta_b=e,
        delta_p=e,
        bsteps=0,
        recurrence=False,
        rate=rate,
    )
