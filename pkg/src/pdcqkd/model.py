"""Photon-number-resolved model of a two-mode PDC source with threshold detectors.

The source emits n photon pairs per pulse with probability

    P(n) = (n + 1) lam^n / (1 + lam)^(n + 2),

where lam parametrizes the source brightness (expected pair number is
2*lam).  Each side of the experiment has a lumped transmittance eta
(detector efficiency times channel transmittance) and a background click
probability y0 per pulse (dark counts plus stray light).  All per-pulse
observables used by the key-rate layers derive from here: per-n yields
and error rates, and their closed-form sums over n.

Conventions: a "coincidence" is a pulse where both sides register at
least one click.  Double clicks are kept and assigned a random bit, so
the error rate attached to background-driven events is e0 = 1/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

__all__ = [
    "DEFAULT_ETA_INTRINSIC",
    "DEFAULT_Y0",
    "DEFAULT_E_D",
    "DEFAULT_LAM",
    "SERIES_N_MAX",
    "SERIES_PMF_FLOOR",
    "SourceParams",
    "SideParams",
    "SetupParams",
    "Placement",
    "ChannelScenario",
    "scenario_etas",
    "scenario_setup",
    "pair_pmf",
    "eta_overall_n",
    "yield_n",
    "gain_n",
    "overall_gain",
    "error_nm",
    "error_n",
    "overall_qber",
]

# Reference hardware values (detector efficiency, background rate per
# side, alignment error) used as defaults throughout.
DEFAULT_ETA_INTRINSIC = 0.145
DEFAULT_Y0 = 6.02e-6
DEFAULT_E_D = 0.015
DEFAULT_LAM = 0.0265

# Photon-number sums truncate once the pair pmf drops below this floor,
# and never run past SERIES_N_MAX terms.
SERIES_N_MAX = 500
SERIES_PMF_FLOOR = 1e-15

@dataclass(frozen=True)
class SourceParams:
    """PDC source brightness.

    lam is half the expected number of photon pairs per pulse.  The
    experimentally quoted mean pair number mu equals 2*lam.
    """

    lam: float

    def __post_init__(self) -> None:
        if not (self.lam >= 0.0 and math.isfinite(self.lam)):
            raise ValueError(f"lam must be finite and >= 0, got {self.lam}")

    @property
    def mean_pairs(self) -> float:
        return 2.0 * self.lam

    @classmethod
    def from_mean_pairs(cls, mu: float) -> "SourceParams":
        return cls(lam=mu / 2.0)

    @classmethod
    def from_coupling(cls, chi: float) -> "SourceParams":
        """Build from the parametric coupling strength chi (lam = sinh^2 chi)."""
        return cls(lam=math.sinh(chi) ** 2)


@dataclass(frozen=True)
class SideParams:
    """One receiver: lumped transmittance eta and background rate y0."""

    eta: float
    y0: float = 0.0

    def __post_init__(self) -> None:
        if not (0.0 <= self.eta <= 1.0):
            raise ValueError(f"eta must lie in [0, 1], got {self.eta}")
        if not (0.0 <= self.y0 <= 1.0):
            raise ValueError(f"y0 must lie in [0, 1], got {self.y0}")


@dataclass(frozen=True)
class SetupParams:
    """Both receivers plus the polarization misalignment error e_d.

    e0 is the error rate of a background or double click: 1/2, kept as a
    field so the degenerate value stays visible at call sites.
    """

    alice: SideParams
    bob: SideParams
    e_d: float = DEFAULT_E_D
    e0: float = 0.5

    def __post_init__(self) -> None:
        if not (0.0 <= self.e_d <= 0.5):
            raise ValueError(f"e_d must lie in [0, 1/2], got {self.e_d}")
        if not (0.0 <= self.e0 <= 1.0):
            raise ValueError(f"e0 must lie in [0, 1], got {self.e0}")


class Placement(Enum):
    """Where the source sits relative to the lossy channel."""

    MIDDLE = "middle"
    AT_ALICE = "alice"


@dataclass(frozen=True)
class ChannelScenario:
    """Total channel loss and how it is split between the two arms."""

    placement: Placement
    total_loss_db: float
    eta_alice_intrinsic: float = DEFAULT_ETA_INTRINSIC
    eta_bob_intrinsic: float = DEFAULT_ETA_INTRINSIC
    y0_side: float = DEFAULT_Y0

    def __post_init__(self) -> None:
        if self.total_loss_db < 0.0:
            raise ValueError(f"loss must be >= 0 dB, got {self.total_loss_db}")
        for name in ("eta_alice_intrinsic", "eta_bob_intrinsic", "y0_side"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1], got {v}")


def scenario_etas(scn: ChannelScenario) -> tuple[float, float]:
    """Per-side transmittances for a scenario.

    MIDDLE splits the total loss evenly over the two arms; AT_ALICE puts
    all of it on Bob's arm and leaves Alice at her intrinsic efficiency.
    """
    if scn.placement is Placement.MIDDLE:
        arm = 10.0 ** (-scn.total_loss_db / 20.0)
        return scn.eta_alice_intrinsic * arm, scn.eta_bob_intrinsic * arm
    arm = 10.0 ** (-scn.total_loss_db / 10.0)
    return scn.eta_alice_intrinsic, scn.eta_bob_intrinsic * arm


def scenario_setup(scn: ChannelScenario, e_d: float = DEFAULT_E_D, e0: float = 0.5) -> SetupParams:
    """Assemble SetupParams for a scenario (same y0 on both sides)."""
    eta_a, eta_b = scenario_etas(scn)
    return SetupParams(
        alice=SideParams(eta=eta_a, y0=scn.y0_side),
        bob=SideParams(eta=eta_b, y0=scn.y0_side),
        e_d=e_d,
        e0=e0,
    )


def pair_pmf(n: int, src: SourceParams) -> float:
    """Probability of emitting exactly n photon pairs in one pulse.

    P(n) = (n+1) lam^n / (1+lam)^(n+2), evaluated as (n+1) x^n (1-x)^2
    with x = lam/(1+lam) so large n cannot overflow.
    """
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    x = src.lam / (1.0 + src.lam)
    return (n + 1) * x**n / (1.0 + src.lam) ** 2


def _click_prob(eta: float, y0: float, n: int) -> float:
    """1 - (1 - y0) (1 - eta)^n, the chance one side clicks on n photons.

    Evaluated as -expm1(log1p(-y0) + n log1p(-eta)): the direct form
    loses most of its digits when both eta*n and y0 are small.
    """
    if n == 0:
        return y0
    if eta == 1.0:
        return 1.0
    return -math.expm1(math.log1p(-y0) + n * math.log1p(-eta))


def eta_overall_n(n: int, setup: SetupParams) -> float:
    """Probability that both sides detect signal photons from an n-pair pulse."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return _click_prob(setup.alice.eta, 0.0, n) * _click_prob(setup.bob.eta, 0.0, n)


def yield_n(n: int, setup: SetupParams) -> float:
    """Coincidence probability for an n-pair pulse, backgrounds included."""
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    return _click_prob(setup.alice.eta, setup.alice.y0, n) * _click_prob(
        setup.bob.eta, setup.bob.y0, n
    )


def gain_n(n: int, src: SourceParams, setup: SetupParams) -> float:
    """Joint probability of emitting n pairs and registering a coincidence."""
    return yield_n(n, setup) * pair_pmf(n, src)


def overall_gain(src: SourceParams, setup: SetupParams) -> float:
    """Total coincidence probability per pulse, summed over n in closed form.

    Equal to
        1 - (1-y0A)/(1+eta_A lam)^2 - (1-y0B)/(1+eta_B lam)^2
          + (1-y0A)(1-y0B)/(1 + eta_A lam + eta_B lam - eta_A eta_B lam)^2,
    but rearranged into a sum of nonnegative terms over a common
    denominator: the literal alternating form cancels to ~eta_A*eta_B*lam
    and loses ten digits when the arms are very lossy.
    """
    lam = src.lam
    ea, eb = setup.alice.eta, setup.bob.eta
    y0a, y0b = setup.alice.y0, setup.bob.y0
    a = ea * lam
    b = eb * lam
    d = ea * eb * lam
    c = a + b - d

    one_a = (1.0 + a) ** 2
    one_b = (1.0 + b) ** 2
    one_c = (1.0 + c) ** 2

    # Pure-signal part: 1 - 1/(1+a)^2 - 1/(1+b)^2 + 1/(1+c)^2 put over
    # the common denominator; every numerator term is >= 0.
    signal = (a * b * (2.0 + a) * (2.0 + b) * one_c + (a * b + d) * (2.0 + a + b + c + a * b)) / (
        one_a * one_b * one_c
    )
    # Background cross terms: y0A*(u^2-w^2), y0B*(v^2-w^2), y0A*y0B*w^2
    # with u,v,w the three reciprocals above; the differences factor
    # exactly, so nothing cancels.
    cross_a = y0a * (b - d) * (2.0 + a + c) / (one_a * one_c)
    cross_b = y0b * (a - d) * (2.0 + b + c) / (one_b * one_c)
    floor = y0a * y0b / one_c
    return signal + cross_a + cross_b + floor


def error_nm(n: int, m: int, setup: SetupParams) -> float:
    """Error rate of coincidences from an n-pair pulse with polarization split m.

    The pulse puts n-m photons of one polarization and m of the other
    into Alice's arm (mirrored for Bob).  Both-sides-clean detections of
    the majority polarization inherit only the alignment error e_d;
    every other pattern averages to a random bit.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0 <= m <= n:
        raise ValueError(f"m must lie in [0, n], got {m}")
    yn = yield_n(n, setup)
    if yn == 0.0:
        raise ValueError("yield_n is zero; error rate undefined")
    alpha = 1.0 - setup.alice.eta
    beta = 1.0 - setup.bob.eta
    bracket = (alpha ** (n - m) - alpha**m) * (beta ** (n - m) - beta**m)
    return setup.e0 - (setup.e0 - setup.e_d) * bracket / yn


def error_n(n: int, setup: SetupParams) -> float:
    """Error rate of coincidences from n-pair pulses, averaged over the split m.

    Closed form of the uniform average of error_nm over m = 0..n:

        e_n = e0 - 2 (e0 - e_d) / ((n+1) Y_n)
                 * [ (1 - (ab)^(n+1)) / (1 - ab)
                     - (a^(n+1) - b^(n+1)) / (a - b) ]

    with a = 1 - eta_A, b = 1 - eta_B.  The two geometric sums agree to
    many digits when both efficiencies are small, so the bracket is
    evaluated by pairing terms of the underlying sums instead:

        sum_{j < (n+1)/2} (ab)^j (1 - a^(n-2j)) (1 - b^(n-2j)),

    which is a sum of nonnegative terms and has no singularity at
    eta_A = eta_B.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    yn = yield_n(n, setup)
    if yn == 0.0:
        raise ValueError("yield_n is zero; error rate undefined")
    ea, eb = setup.alice.eta, setup.bob.eta
    alpha = 1.0 - ea
    beta = 1.0 - eb

    bracket = 0.0
    for j in range((n + 1) // 2):
        k = n - 2 * j
        ta = 1.0 if ea == 1.0 else -math.expm1(k * math.log1p(-ea))
        tb = 1.0 if eb == 1.0 else -math.expm1(k * math.log1p(-eb))
        bracket += alpha**j * beta**j * ta * tb

    correction = 2.0 * (setup.e0 - setup.e_d) * bracket / ((n + 1) * yn)
    return setup.e0 - correction


def overall_qber(src: SourceParams, setup: SetupParams) -> tuple[float, float]:
    """Return (E, Q): the error rate among coincidences and the gain itself.

    The product E*Q has the closed form

        E*Q = e0*Q - 2 (e0 - e_d) eta_A eta_B lam (1 + lam)
                / [(1 + eta_A lam)(1 + eta_B lam)
                   (1 + eta_A lam + eta_B lam - eta_A eta_B lam)]

    and E is that divided by Q.  Raises ValueError when the gain
    vanishes (no coincidences to attach an error rate to).
    """
    lam = src.lam
    ea, eb = setup.alice.eta, setup.bob.eta
    q = overall_gain(src, setup)
    if q == 0.0:
        raise ValueError("overall gain is zero; QBER undefined")
    a = ea * lam
    b = eb * lam
    c = a + b - ea * eb * lam
    correction = (
        2.0
        * (setup.e0 - setup.e_d)
        * ea
        * eb
        * lam
        * (1.0 + lam)
        / ((1.0 + a) * (1.0 + b) * (1.0 + c))
    )
    eq = setup.e0 * q - correction
    return eq / q, q
