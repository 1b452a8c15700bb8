"""Tracking and hedging wrappers over an expert forecast stream.

Tracking replaces the expert's forecast with the average outcome observed
on past steps whose expert forecast fell in the same epsilon-bin (bin
midpoint while the bin is empty).

Hedging runs one randomized forecaster per expert bin. Each forecaster
keeps, for every bin b, the count of times it forecast that bin's midpoint
and the average outcome on those steps (initialized to the midpoint).
With left endpoint l_b and right endpoint r_b it defines
deficit d_b = l_b - p_b and excess e_b = p_b - r_b, and forecasts:

  - condition A: some b has d_b <= 0 and e_b <= 0 -> point mass on that
    bin's midpoint (smallest such b);
  - otherwise condition B: some b has e_b > 0 and d_{b+1} > 0 -> hedge on
    the two midpoints (m_b, m_{b+1}) with probabilities
    (d_{b+1}, e_b) / (d_{b+1} + e_b) (smallest such b).

One of the two always holds for valid state; the code asserts it. The
two-point distribution is announced BEFORE the outcome is committed, and
the realized draw happens after - adversaries get the distribution, never
the draw. Step functions consume one uniform per call (used or not) so
that step-by-step runs replay the batched kernels exactly.

Step-level functions here are the readable reference; the pipeline uses
the kernels in ``opscal.kernels``, and the test suite pins the two
implementations together.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .core import BinningScheme, ForecastTrace, bin_index


class CalibeatingInvariantError(RuntimeError):
    """A structural guarantee (condition A-or-B, a theorem bound) failed."""


@dataclass
class TrackingState:
    """Per-bin counts and outcome sums over strictly-past expert steps."""

    scheme: BinningScheme
    counts: np.ndarray = None
    outcome_sums: np.ndarray = None

    def __post_init__(self):
        if self.counts is None:
            self.counts = np.zeros(self.scheme.m)
        if self.outcome_sums is None:
            self.outcome_sums = np.zeros(self.scheme.m)


def tracking_forecast(state: TrackingState, expert_p: float) -> float:
    """Past outcome average of the expert's bin; its midpoint when empty."""
    b = bin_index(expert_p, state.scheme) - 1
    if state.counts[b] > 0.0:
        return float(state.outcome_sums[b] / state.counts[b])
    return (b + 0.5) * state.scheme.epsilon


def tracking_update(state: TrackingState, expert_p: float, y) -> TrackingState:
    """Fold (expert_p, y) into the expert bin's statistics."""
    b = bin_index(expert_p, state.scheme) - 1
    counts = state.counts.copy()
    sums = state.outcome_sums.copy()
    counts[b] += 1.0
    sums[b] += float(y)
    return TrackingState(scheme=state.scheme, counts=counts, outcome_sums=sums)


def tracking_run(expert_ps, ys, scheme: BinningScheme) -> np.ndarray:
    """Whole-stream tracking via the batched kernel."""
    expert_ps = np.ascontiguousarray(np.asarray(expert_ps, dtype=float))
    ys = np.ascontiguousarray(np.asarray(ys, dtype=float))
    return kernels.tracking_pass(expert_ps, ys, scheme.epsilon, scheme.m)


@dataclass
class HedgeDistribution:
    """One- or two-point distribution on consecutive bin midpoints."""

    support: tuple
    probs: tuple

    def __post_init__(self):
        if len(self.support) != len(self.probs) or len(self.support) not in (1, 2):
            raise ValueError("support and probs must both have length 1 or 2")
        if any(p < 0.0 for p in self.probs) or abs(sum(self.probs) - 1.0) > 1e-12:
            raise ValueError("probs must be nonnegative and sum to 1")

    def mean(self) -> float:
        return float(sum(p * s for p, s in zip(self.probs, self.support)))

    def sample(self, u: float) -> float:
        """Resolve the draw with a uniform variate u in [0, 1)."""
        if len(self.support) == 1 or u < self.probs[0]:
            return self.support[0]
        return self.support[1]


@dataclass
class F99State:
    """One hedging forecaster: per-bin forecast counts and outcome sums."""

    scheme: BinningScheme
    counts: np.ndarray = None
    outcome_sums: np.ndarray = None

    def __post_init__(self):
        if self.counts is None:
            self.counts = np.zeros(self.scheme.m)
        if self.outcome_sums is None:
            self.outcome_sums = np.zeros(self.scheme.m)

    def observed_averages(self) -> np.ndarray:
        """p_b: running outcome mean where bin b's midpoint was forecast,
        the midpoint itself while the bin is untouched."""
        out = self.scheme.midpoints().copy()
        nz = self.counts > 0
        out[nz] = self.outcome_sums[nz] / self.counts[nz]
        return out

    def deficits(self) -> np.ndarray:
        return self.scheme.left_edges() - self.observed_averages()

    def excesses(self) -> np.ndarray:
        return self.observed_averages() - self.scheme.right_edges()


def f99_distribution(state: F99State) -> HedgeDistribution:
    """The announced forecast distribution for the next step.

    Exposed separately from the draw so outcome generators may condition on
    it (they must commit y before the draw resolves).
    """
    try:
        lo, hi, plo = kernels.f99_dist_row(
            state.counts, state.outcome_sums, state.scheme.epsilon, state.scheme.m
        )
    except RuntimeError as exc:
        raise CalibeatingInvariantError(str(exc)) from None
    if hi == lo:
        return HedgeDistribution(support=(lo,), probs=(1.0,))
    return HedgeDistribution(support=(lo, hi), probs=(plo, 1.0 - plo))


def f99_forecast(state: F99State, rng: np.random.Generator):
    """Announce the distribution, then draw the forecast from it.

    Consumes exactly one uniform from ``rng`` whether or not the
    distribution randomizes, so seeded runs replay bit-for-bit against the
    batched kernels.
    """
    dist = f99_distribution(state)
    u = float(rng.random())
    return dist, dist.sample(u)


def f99_update(state: F99State, chosen: float, y) -> F99State:
    """Fold the outcome into the statistics of the forecast bin."""
    eps = state.scheme.epsilon
    b = int(np.floor(chosen / eps))
    b = min(b, state.scheme.m - 1)
    if abs((b + 0.5) * eps - chosen) > 1e-9:
        raise ValueError("chosen forecast is not a bin midpoint of this scheme")
    counts = state.counts.copy()
    sums = state.outcome_sums.copy()
    counts[b] += 1.0
    sums[b] += float(y)
    return F99State(scheme=state.scheme, counts=counts, outcome_sums=sums)


def f99_run(ys, scheme: BinningScheme, rng: np.random.Generator) -> np.ndarray:
    """Covariate-free hedging over an outcome sequence (batched kernel)."""
    ys = np.ascontiguousarray(np.asarray(ys, dtype=float))
    us = rng.random(len(ys))
    expert = np.zeros(len(ys))
    return kernels.hops_pass(expert, ys, us, scheme.epsilon, scheme.m)


@dataclass
class HopsState:
    """m independent hedging forecasters, one per expert bin."""

    scheme: BinningScheme
    instances: list = field(default_factory=list)

    def __post_init__(self):
        if not self.instances:
            self.instances = [F99State(self.scheme) for _ in range(self.scheme.m)]

    def distribution(self, expert_p: float) -> HedgeDistribution:
        """The announced distribution of the instance routed by expert_p."""
        b = bin_index(expert_p, self.scheme) - 1
        return f99_distribution(self.instances[b])


def hops_step(state: HopsState, expert_p: float, y, rng: np.random.Generator):
    """Route to the expert-bin instance, forecast, then absorb the outcome.

    Returns (drawn forecast, new HopsState). The expert's bin is determined
    by the raw expert forecast. Consumes one uniform per call.
    """
    b = bin_index(expert_p, state.scheme) - 1
    dist, chosen = f99_forecast(state.instances[b], rng)
    new_instances = list(state.instances)
    new_instances[b] = f99_update(state.instances[b], chosen, y)
    return chosen, HopsState(scheme=state.scheme, instances=new_instances)


def hops_run(expert_ps, ys, scheme: BinningScheme, rng: np.random.Generator) -> np.ndarray:
    """Whole-stream hedging over an expert column (batched kernel)."""
    expert_ps = np.ascontiguousarray(np.asarray(expert_ps, dtype=float))
    ys = np.ascontiguousarray(np.asarray(ys, dtype=float))
    us = rng.random(len(ys))
    return kernels.hops_pass(expert_ps, ys, us, scheme.epsilon, scheme.m)


def climatology_run(outcomes, epsilon: float, rng: np.random.Generator) -> ForecastTrace:
    """Run a single covariate-free hedging forecaster over an outcome
    sequence and return the forecast trace."""
    outcomes = np.asarray(outcomes, dtype=float)
    if len(outcomes) == 0:
        raise ValueError("empty outcome sequence")
    scheme = BinningScheme(epsilon)
    forecasts = f99_run(outcomes, scheme, rng)
    return ForecastTrace(y=outcomes, forecasts={"F99": forecasts})
