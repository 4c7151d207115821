"""Noise schedules for the binary edge-flip chain.

The cumulative flip probabilities ``beta_bar[0..T]`` are the primary
parameterization (0 at t=0, 1/2 at t=T); per-step flip probabilities
``beta[1..T]`` are derived from consecutive cumulative values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "NoiseSchedule",
    "ScheduleError",
    "beta_from_beta_bar",
    "beta_bar_from_beta",
    "linear_schedule",
    "cosine_schedule",
    "make_schedule",
]

CONSISTENCY_TOL = 1e-12


class ScheduleError(ValueError):
    pass


def beta_from_beta_bar(beta_bar):
    """Per-step flip probabilities from cumulative ones.

    ``beta[t] = (beta_bar[t-1] - beta_bar[t]) / (2 * beta_bar[t-1] - 1)``.
    Works elementwise on any numeric sequence (floats, Fractions, ...);
    returns an ndarray for ndarray input, else a list in the input's
    arithmetic. A cumulative value of 1/2 anywhere but the last position
    makes the next step singular and is rejected.
    """
    values = list(beta_bar)
    if not values:
        raise ScheduleError("beta_bar must be non-empty")
    for t, b in enumerate(values):
        if not 0 <= b <= 0.5:
            raise ScheduleError(f"beta_bar[{t}]={b} outside [0, 1/2]")
        if b == 0.5 and t != len(values) - 1:
            raise ScheduleError(f"beta_bar[{t}]=1/2 before the final step is singular")
    betas = [
        (prev - cur) / (2 * prev - 1)
        for prev, cur in zip(values[:-1], values[1:])
    ]
    if isinstance(beta_bar, np.ndarray):
        return np.asarray(betas, dtype=np.float64)
    return betas


def beta_bar_from_beta(beta):
    """Cumulative flip probabilities via the product form.

    ``beta_bar[t] = 1/2 - 1/2 * prod_{i<=t} (1 - 2 * beta[i])`` with
    ``beta_bar[0] = 0``. Same genericity contract as
    :func:`beta_from_beta_bar`.
    """
    values = list(beta)
    out = [0]
    prod = 1
    for b in values:
        prod = prod * (1 - 2 * b)
        out.append((1 - prod) / 2)
    if isinstance(beta, np.ndarray):
        return np.asarray(out, dtype=np.float64)
    return out


@dataclass(frozen=True)
class NoiseSchedule:
    """A T-step schedule: cumulative beta_bar[0..T] and per-step beta[1..T]."""

    steps: int
    beta_bar: np.ndarray
    beta: np.ndarray
    kind: str = "custom"

    def __post_init__(self):
        T = self.steps
        if T < 1:
            raise ScheduleError(f"step count must be >= 1, got {T}")
        bb = np.asarray(self.beta_bar, dtype=np.float64)
        b = np.asarray(self.beta, dtype=np.float64)
        if bb.shape != (T + 1,) or b.shape != (T,):
            raise ScheduleError("beta_bar needs T+1 entries and beta needs T")
        if bb[0] != 0.0 or bb[T] != 0.5:
            raise ScheduleError("beta_bar must start at 0 and end at 1/2")
        if not np.all(np.diff(bb) > 0):
            raise ScheduleError("beta_bar must be strictly increasing")
        if np.any(b <= 0) or np.any(b > 0.5):
            raise ScheduleError("per-step beta values must lie in (0, 1/2]")
        rebuilt = beta_bar_from_beta(b)
        if np.max(np.abs(rebuilt - bb)) > CONSISTENCY_TOL:
            raise ScheduleError("beta and beta_bar are mutually inconsistent")
        bb.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "beta_bar", bb)
        object.__setattr__(self, "beta", b)

    def flip_prob(self, t: int) -> float:
        """Single-step flip probability beta_t, 1 <= t <= T."""
        if not 1 <= t <= self.steps:
            raise IndexError(f"step {t} out of range 1..{self.steps}")
        return float(self.beta[t - 1])

    def cumulative_flip_prob(self, t: int) -> float:
        """Cumulative flip probability beta_bar_t, 0 <= t <= T."""
        if not 0 <= t <= self.steps:
            raise IndexError(f"step {t} out of range 0..{self.steps}")
        return float(self.beta_bar[t])


def _build(kind: str, beta_bar: np.ndarray, T: int) -> NoiseSchedule:
    beta = beta_from_beta_bar(beta_bar)
    return NoiseSchedule(steps=T, beta_bar=beta_bar, beta=beta, kind=kind)


def linear_schedule(T: int) -> NoiseSchedule:
    """Cumulative flip probability ramps linearly from 0 to 1/2."""
    if T < 1:
        raise ScheduleError(f"step count must be >= 1, got {T}")
    beta_bar = 0.5 * np.arange(T + 1, dtype=np.float64) / T
    return _build("linear", beta_bar, T)


def cosine_schedule(T: int) -> NoiseSchedule:
    """Cumulative flip probability follows a half-cosine ramp from 0 to 1/2.

    ``beta_bar[t] = 1/2 * sin^2(pi*t / (2T))``, rescaled so the endpoints are
    exactly 0 and 1/2.
    """
    if T < 1:
        raise ScheduleError(f"step count must be >= 1, got {T}")
    t = np.arange(T + 1, dtype=np.float64)
    base = np.sin(math.pi * t / (2 * T)) ** 2
    beta_bar = 0.5 * base / base[T]
    beta_bar[0] = 0.0
    beta_bar[T] = 0.5
    return _build("cosine", beta_bar, T)


_SCHEDULES = {"linear": linear_schedule, "cosine": cosine_schedule}


def make_schedule(kind: str, T: int) -> NoiseSchedule:
    """Build a schedule from its config name ('linear' or 'cosine')."""
    try:
        builder = _SCHEDULES[kind]
    except KeyError:
        raise ScheduleError(f"unknown schedule kind {kind!r}") from None
    return builder(T)
