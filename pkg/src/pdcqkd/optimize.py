"""Source brightness optimization.

Two routes to the optimal lambda: direct golden-section search on any
rate function (used by the sweeps), and root-finding on the
stationarity equations of the small-eta_B approximate rate (used for
the optimal-mu-vs-e_d curves).  The approximations assume eta_B small
and no background; eta_A sits at one of two extremes, near unity or
itself small.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable

from .rates import binary_entropy

__all__ = [
    "SearchBounds",
    "optimize_lambda",
    "approx_gain",
    "approx_qber",
    "approx_rate",
    "Regime",
    "stationarity_residual",
    "optimal_mu_curve",
]

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
_COARSE_POINTS = 48


@dataclass(frozen=True)
class SearchBounds:
    """Brightness search window and the absolute lambda tolerance."""

    lambda_min: float = 1e-3
    lambda_max: float = 2.5
    tolerance: float = 1e-6

    def __post_init__(self) -> None:
        if not (0.0 < self.lambda_min < self.lambda_max):
            raise ValueError(
                f"need 0 < lambda_min < lambda_max, got [{self.lambda_min}, {self.lambda_max}]"
            )
        if self.tolerance <= 0.0:
            raise ValueError(f"tolerance must be > 0, got {self.tolerance}")


def _golden_max(fn: Callable[[float], float], lo: float, hi: float, tol: float) -> float:
    """Golden-section maximization on [lo, hi] down to width tol."""
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = fn(d)
    return 0.5 * (a + b)


def optimize_lambda(
    rate_fn: Callable[[float], float], bounds: SearchBounds = SearchBounds()
) -> tuple[float, float]:
    """Maximize rate_fn over lambda.

    A coarse log-spaced grid locates the global basin (the two-way
    envelope has kinks, so a bare local search could latch onto the
    wrong k branch), then golden-section search polishes the bracket
    around the best grid point.  Warns when the maximum sits on a
    search boundary.
    """
    log_lo = math.log(bounds.lambda_min)
    log_hi = math.log(bounds.lambda_max)
    grid = [
        math.exp(log_lo + (log_hi - log_lo) * i / (_COARSE_POINTS - 1))
        for i in range(_COARSE_POINTS)
    ]
    vals = [rate_fn(x) for x in grid]
    i_best = max(range(len(grid)), key=vals.__getitem__)
    if i_best == 0 or i_best == len(grid) - 1:
        warnings.warn(
            f"rate maximum sits on the lambda search boundary ({grid[i_best]:.3g})",
            RuntimeWarning,
            stacklevel=2,
        )
    lo = grid[max(i_best - 1, 0)]
    hi = grid[min(i_best + 1, len(grid) - 1)]
    lam = _golden_max(rate_fn, lo, hi, bounds.tolerance)
    return lam, rate_fn(lam)


def approx_gain(lam: float, eta_a: float, eta_b: float) -> float:
    """Small-eta_B, no-background gain: 2 eta_B lam [1 - (1-eta_A)/(1+eta_A lam)^3]."""
    return 2.0 * eta_b * lam * (1.0 - (1.0 - eta_a) / (1.0 + eta_a * lam) ** 3)


def approx_qber(lam: float, eta_a: float, e_d: float) -> float:
    """Small-eta_B, no-background QBER.

    1/2 - (1-2 e_d)(1+lam)(1+eta_A lam) / (2 (1 + 3 lam + 3 eta_A lam^2 + eta_A^2 lam^3)).
    """
    num = (1.0 - 2.0 * e_d) * (1.0 + lam) * (1.0 + eta_a * lam)
    den = 2.0 * (1.0 + 3.0 * lam + 3.0 * eta_a * lam**2 + eta_a**2 * lam**3)
    return 0.5 - num / den


def approx_rate(lam: float, eta_a: float, eta_b: float, e_d: float, f_ec: float = 1.22) -> float:
    """One-way rate built from the approximate gain and QBER (q = 1/2)."""
    e = approx_qber(lam, eta_a, e_d)
    h = binary_entropy(e)
    return 0.5 * approx_gain(lam, eta_a, eta_b) * (1.0 - (1.0 + f_ec) * h)


class Regime(Enum):
    """eta_A extreme the stationarity equation was specialized for."""

    ETA_A_NEAR_ONE = "eta_a~1"
    ETA_A_SMALL = "eta_a<<1"


def _regime_qber(lam: float, e_d: float, regime: Regime) -> float:
    if regime is Regime.ETA_A_NEAR_ONE:
        return (2.0 * e_d + lam) / (2.0 + 2.0 * lam)
    return (e_d + lam + e_d * lam) / (1.0 + 3.0 * lam)


def stationarity_residual(lam: float, e_d: float, f_ec: float = 1.22, regime: Regime = Regime.ETA_A_NEAR_ONE) -> float:
    """Left-hand side of the optimal-lambda condition dR/dlam = 0.

    eta_A ~ 1:   1 - (1+f) H2(E) - lam (1+f) (1-2 e_d)/(2 (1+lam)^2) log2((1-E)/E)
    eta_A << 1:  (1+6 lam){1 - (1+f) H2(E)} - lam (1+f) (1-2 e_d)/(1+3 lam) log2((1-E)/E)

    with E the regime's approximate QBER.  A positive residual means
    the approximate rate still grows with lambda.
    """
    if lam <= 0.0:
        raise ValueError(f"lam must be > 0, got {lam}")
    if not 0.0 <= e_d < 0.5:
        raise ValueError(f"e_d must lie in [0, 1/2), got {e_d}")
    e = _regime_qber(lam, e_d, regime)
    slope = math.log2((1.0 - e) / e)
    g = 1.0 - (1.0 + f_ec) * binary_entropy(e)
    if regime is Regime.ETA_A_NEAR_ONE:
        return g - lam * (1.0 + f_ec) * (1.0 - 2.0 * e_d) / (2.0 * (1.0 + lam) ** 2) * slope
    return (1.0 + 6.0 * lam) * g - lam * (1.0 + f_ec) * (1.0 - 2.0 * e_d) / (1.0 + 3.0 * lam) * slope


def _bisect(fn: Callable[[float], float], lo: float, hi: float, tol: float) -> float:
    flo = fn(lo)
    for _ in range(200):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        fmid = fn(mid)
        if fmid == 0.0:
            return mid
        if (flo > 0.0) == (fmid > 0.0):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def optimal_mu_curve(
    e_d_values: Iterable[float],
    regime: Regime,
    f_ec: float = 1.22,
    lam_window: tuple[float, float] = (1e-9, 5.0),
    tol: float = 1e-6,
) -> list[tuple[float, float]]:
    """Optimal mu = 2*lambda per e_d from the stationarity root.

    Grid points whose residual never changes sign inside lam_window
    (no interior optimum: the approximate rate is already decreasing at
    lambda -> 0) report mu = nan.
    """
    lo, hi = lam_window
    out: list[tuple[float, float]] = []
    for e_d in e_d_values:
        res = lambda lam: stationarity_residual(lam, e_d, f_ec, regime)
        # The residual is positive below the root and negative above it;
        # scan a log grid for the sign change to bracket robustly.
        scan = [lo * (hi / lo) ** (i / 63) for i in range(64)]
        bracket = None
        for a, b in zip(scan, scan[1:]):
            if (res(a) > 0.0) != (res(b) > 0.0):
                bracket = (a, b)
                break
        if bracket is None:
            out.append((e_d, math.nan))
            continue
        lam_root = _bisect(res, bracket[0], bracket[1], tol)
        out.append((e_d, 2.0 * lam_root))
    return out
