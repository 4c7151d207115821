"""Forward edge-flip kernel, closed-form marginals, and exact reverse posterior.

Every edge evolves as an independent two-state Markov chain with a symmetric
(doubly stochastic) transition matrix, so all distributions here reduce to
scalar flip probabilities: ``beta[t]`` for one step and ``beta_bar[t]``
cumulatively from t=0.
"""

from __future__ import annotations

import numpy as np

from .graphs import Graph
from .schedule import NoiseSchedule

__all__ = [
    "forward_flip_prob",
    "noise_edge_array",
    "noise_graph",
    "posterior_cases",
    "posterior",
    "reverse_marginal",
]


def forward_flip_prob(schedule: NoiseSchedule, t: int) -> float:
    """Single-step flip probability beta_t of the forward kernel."""
    return schedule.flip_prob(t)


def noise_edge_array(arr: np.ndarray, flip_prob: float, rng: np.random.Generator) -> np.ndarray:
    """Flip each pair flag independently with the given probability."""
    return arr ^ (rng.random(arr.shape) < flip_prob)


def noise_graph(g: Graph, schedule: NoiseSchedule, t: int, rng: np.random.Generator) -> Graph:
    """Sample A_t from the cumulative forward marginal q(A_t | A_0 = g).

    Each unordered pair is flipped independently with probability
    ``beta_bar[t]``; t=0 returns the input unchanged.
    """
    bb = schedule.cumulative_flip_prob(t)
    if bb == 0.0:
        return g
    return Graph.from_edge_array(g.n, noise_edge_array(g.edge_array(), bb, rng))


def posterior_cases(beta_t, beta_bar_prev, beta_bar_t) -> dict[tuple[int, int], object]:
    """P(edge present at t-1 | the four (a_t, a_0) bit cases).

    Pure arithmetic on whatever numeric type is supplied (floats for
    production, Fractions for exact tests). Keys are (a_t, a_0).
    """
    stay = 1 - beta_t
    return {
        (1, 1): stay * (1 - beta_bar_prev) / (1 - beta_bar_t),
        (1, 0): stay * beta_bar_prev / beta_bar_t,
        (0, 1): beta_t * (1 - beta_bar_prev) / beta_bar_t,
        (0, 0): beta_t * beta_bar_prev / (1 - beta_bar_t),
    }


def _check_posterior_step(schedule: NoiseSchedule, t: int) -> None:
    if not 2 <= t <= schedule.steps:
        raise IndexError(
            f"posterior needs 2 <= t <= {schedule.steps}, got {t} "
            "(at t=1 the chain conditions directly on A_0)"
        )


def posterior(schedule: NoiseSchedule, t: int, a_t: int, a_0: int) -> float:
    """Exact reverse posterior P(A_{t-1}=1 | A_t = a_t, A_0 = a_0) per edge."""
    _check_posterior_step(schedule, t)
    if a_t not in (0, 1) or a_0 not in (0, 1):
        raise ValueError(f"edge states must be 0/1 bits, got ({a_t}, {a_0})")
    cases = posterior_cases(
        schedule.beta[t - 1], schedule.beta_bar[t - 1], schedule.beta_bar[t]
    )
    return float(cases[(a_t, a_0)])


def reverse_marginal(schedule: NoiseSchedule, t: int, a_t, p0):
    """P(A_{t-1}=1 | a_t) when A_0=1 holds with probability ``p0``.

    Mixes the two posterior cases for the observed ``a_t``. Accepts scalars
    or aligned arrays for ``a_t`` (bits) and ``p0``.
    """
    _check_posterior_step(schedule, t)
    p0_arr = np.asarray(p0, dtype=np.float64)
    if np.any(p0_arr < 0) or np.any(p0_arr > 1):
        raise ValueError("p0 must lie in [0, 1]")
    c = posterior_cases(
        float(schedule.beta[t - 1]),
        float(schedule.beta_bar[t - 1]),
        float(schedule.beta_bar[t]),
    )
    on = p0_arr * c[(1, 1)] + (1 - p0_arr) * c[(1, 0)]
    off = p0_arr * c[(0, 1)] + (1 - p0_arr) * c[(0, 0)]
    out = np.where(np.asarray(a_t, dtype=bool), on, off)
    if out.ndim == 0:
        return float(out)
    return out
