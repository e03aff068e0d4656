"""Two-way post-processing: what B steps buy at high loss.

A B step compares bit parities of pairs, keeps one bit on agreement and
throws both away otherwise. Bit errors shrink quadratically, phase
errors spread, throughput halves. Worth it exactly when the channel is
so lossy that the one-way bracket 1 - f*H2(db) - H2(dp) has gone
negative.
"""

import warnings

from pdcqkd.model import ChannelScenario, Placement, SourceParams
from pdcqkd.optimize import SearchBounds, optimize_lambda
from pdcqkd.twoway import ErrorState, bstep_rate, bstep_transform

SCN = lambda L: ChannelScenario(Placement.MIDDLE, L)


def best_rate(loss_db, bsteps, recurrence=False):
    def at(lam):
        return bstep_rate(SourceParams(lam), SCN(loss_db), bsteps=bsteps, recurrence=recurrence).rate

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        lam, rate = optimize_lambda(at, SearchBounds(1e-3, 2.5))
    return lam, rate


# First the headline: how far each ladder rung reaches.
print("largest loss with positive rate (brightness optimized per point):")
for k in range(4):
    cutoff = None
    for L in range(50, 76):
        if best_rate(float(L), k)[1] > 0:
            cutoff = L
    print(f"  {k} B steps: {cutoff} dB")

# Now watch the error state evolve at one hard operating point.
loss = 66.0
lam, rate = best_rate(loss, 3)
print(f"\nat {loss:.0f} dB with 3 B steps, optimizer picks mean pair number {2*lam:.4f}")
from pdcqkd.model import overall_qber, scenario_setup  # noqa: E402

e, q = overall_qber(SourceParams(lam), scenario_setup(SCN(loss)))
print(f"raw qber {e:.4f}, gain {q:.3e}, rate {rate:.3e}")

state = ErrorState.independent(e, e)
throughput = 1.0
for step in range(1, 4):
    state, ps = bstep_transform(state)
    throughput *= ps / 2.0
    print(
        f"after step {step}: bit error {state.delta_b:.3e}, "
        f"phase error {state.delta_p:.3f}, survivors {throughput:.4f}"
    )

# The bit error collapses while the phase error creeps toward 1/2;
# the game is to stop before H2(phase) eats the whole bracket.
