"""Event-level Monte Carlo simulation of the entanglement setup.

Simulates individual pulses instead of evaluating closed forms, as an
independent check of the analytic gain and error model.  One event:

1. draw the pair number n (negative binomial with r=2, matching the
   thermal-pair distribution of the source), or take a forced n;
2. split the pairs: m of them put Alice's photon in V, the other n-m in
   H; Bob's photons land mirrored (m in H, n-m in V);
3. each detector fires if it catches at least one photon (independent
   transmittance per photon) and each side adds a background click with
   probability y0 on a uniformly chosen detector;
4. a coincidence needs at least one click on both sides.  A side with
   exactly one firing detector reads out its bit (V means 1); a side
   with both detectors firing assigns a random bit.  Bob's single-click
   bit is flipped with the misalignment probability e_d.

An error is a coincidence whose bits agree, since a perfect channel
anti-correlates the readouts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .model import SetupParams, SourceParams

__all__ = ["EventKind", "EventOutcome", "MCEstimate", "estimate", "sample_event"]


class EventKind(Enum):
    LOSS = "loss"
    SINGLE_CLICK_COINCIDENCE = "single-click-coincidence"
    DOUBLE_CLICK_COINCIDENCE = "double-click-coincidence"


@dataclass(frozen=True)
class EventOutcome:
    """One simulated pulse.  Bits are set only when the event is a coincidence."""

    kind: EventKind
    n_pairs: int
    alice_bit: int | None = None
    bob_bit: int | None = None

    @property
    def is_coincidence(self) -> bool:
        return self.kind is not EventKind.LOSS

    @property
    def is_error(self) -> bool:
        return self.is_coincidence and self.alice_bit == self.bob_bit


@dataclass(frozen=True)
class MCEstimate:
    n_samples: int
    n_coincidences: int
    n_errors: int
    gain: float
    qber: float
    gain_se: float
    qber_se: float


def sample_event(
    rng: np.random.Generator,
    src: SourceParams,
    setup: SetupParams,
    force_n: int | None = None,
) -> EventOutcome:
    """Draw a single pulse.  force_n pins the pair number for conditional studies."""
    if force_n is not None:
        if force_n < 0:
            raise ValueError(f"force_n must be >= 0, got {force_n}")
        n = force_n
    else:
        n = int(rng.negative_binomial(2, 1.0 / (1.0 + src.lam)))
    m = int(rng.integers(0, n + 1))

    a_h = rng.binomial(n - m, setup.alice.eta) > 0
    a_v = rng.binomial(m, setup.alice.eta) > 0
    b_h = rng.binomial(m, setup.bob.eta) > 0
    b_v = rng.binomial(n - m, setup.bob.eta) > 0
    if rng.random() < setup.alice.y0:
        if rng.random() < 0.5:
            a_h = True
        else:
            a_v = True
    if rng.random() < setup.bob.y0:
        if rng.random() < 0.5:
            b_h = True
        else:
            b_v = True

    if not ((a_h or a_v) and (b_h or b_v)):
        return EventOutcome(EventKind.LOSS, n)

    alice_double = a_h and a_v
    bob_double = b_h and b_v
    alice_bit = int(rng.random() < 0.5) if alice_double else int(a_v)
    if bob_double:
        bob_bit = int(rng.random() < 0.5)
    else:
        bob_bit = int(b_v)
        if rng.random() < setup.e_d:
            bob_bit ^= 1

    kind = (
        EventKind.DOUBLE_CLICK_COINCIDENCE
        if (alice_double or bob_double)
        else EventKind.SINGLE_CLICK_COINCIDENCE
    )
    return EventOutcome(kind, n, alice_bit, bob_bit)


def _simulate_batch(
    rng: np.random.Generator,
    src: SourceParams,
    setup: SetupParams,
    size: int,
    force_n: int | None,
) -> tuple[int, int]:
    """Vectorized pulse batch; returns (coincidences, errors)."""
    if force_n is not None:
        n = np.full(size, force_n, dtype=np.int64)
    else:
        n = rng.negative_binomial(2, 1.0 / (1.0 + src.lam), size=size)
    m = rng.integers(0, n + 1)

    a_h = rng.binomial(n - m, setup.alice.eta) > 0
    a_v = rng.binomial(m, setup.alice.eta) > 0
    b_h = rng.binomial(m, setup.bob.eta) > 0
    b_v = rng.binomial(n - m, setup.bob.eta) > 0

    bg_a = rng.random(size) < setup.alice.y0
    on_h = rng.random(size) < 0.5
    a_h |= bg_a & on_h
    a_v |= bg_a & ~on_h
    bg_b = rng.random(size) < setup.bob.y0
    on_h = rng.random(size) < 0.5
    b_h |= bg_b & on_h
    b_v |= bg_b & ~on_h

    coinc = (a_h | a_v) & (b_h | b_v)
    a_double = a_h & a_v
    b_double = b_h & b_v
    alice_bit = np.where(a_double, rng.random(size) < 0.5, a_v)
    bob_bit = np.where(b_double, rng.random(size) < 0.5, b_v)
    bob_bit ^= ~b_double & (rng.random(size) < setup.e_d)

    errors = coinc & (alice_bit == bob_bit)
    return int(coinc.sum()), int(errors.sum())


def estimate(
    src: SourceParams,
    setup: SetupParams,
    n_samples: int,
    seed=None,
    force_n: int | None = None,
    batch_size: int = 1_000_000,
) -> MCEstimate:
    """Estimate gain and error rate from n_samples simulated pulses.

    seed is anything numpy's default_rng accepts (int, SeedSequence or
    an existing Generator).  Raises if no coincidence was observed, in
    which case the error rate is undefined.
    """
    if n_samples <= 0:
        raise ValueError(f"n_samples must be positive, got {n_samples}")
    if force_n is not None and force_n < 0:
        raise ValueError(f"force_n must be >= 0, got {force_n}")
    rng = np.random.default_rng(seed)
    n_coinc = 0
    n_err = 0
    remaining = n_samples
    while remaining > 0:
        size = min(batch_size, remaining)
        c, e = _simulate_batch(rng, src, setup, size, force_n)
        n_coinc += c
        n_err += e
        remaining -= size
    if n_coinc == 0:
        raise ValueError(
            f"no coincidences in {n_samples} samples; the error rate is undefined"
        )
    gain = n_coinc / n_samples
    qber = n_err / n_coinc
    return MCEstimate(
        n_samples=n_samples,
        n_coincidences=n_coinc,
        n_errors=n_err,
        gain=gain,
        qber=qber,
        gain_se=math.sqrt(gain * (1.0 - gain) / n_samples),
        qber_se=math.sqrt(qber * (1.0 - qber) / n_coinc),
    )
