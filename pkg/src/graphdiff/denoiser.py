"""Denoisers: per-edge probabilities that an edge was present in the clean graph.

A denoiser maps a noisy graph and a timestep to P(A_0 edge present | A_t) for
every unordered pair. Two implementations exist: the exact empirical
posterior over a finite dataset (below) and the trainable network in
:mod:`graphdiff.ppgn`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import numpy as np
from scipy.special import expit, logit

from .graphs import Graph, GraphBatch
from .schedule import NoiseSchedule

__all__ = ["DenoiserOutput", "Denoiser", "EmpiricalDenoiser", "PROB_FLOOR"]

# Probabilities are kept strictly inside (0, 1) so logits stay finite.
PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class DenoiserOutput:
    """Per-pair edge probabilities and the matching pre-sigmoid logits."""

    probs: np.ndarray
    logits: np.ndarray

    @classmethod
    def from_probs(cls, probs: np.ndarray) -> DenoiserOutput:
        p = np.clip(np.asarray(probs, dtype=np.float64), PROB_FLOOR, 1 - PROB_FLOOR)
        lg = logit(p)
        return cls(probs=expit(lg), logits=lg)

    @classmethod
    def from_logits(cls, logits: np.ndarray) -> DenoiserOutput:
        lg = np.asarray(logits, dtype=np.float64)
        p = np.clip(expit(lg), PROB_FLOOR, 1 - PROB_FLOOR)
        return cls(probs=p, logits=lg)


@runtime_checkable
class Denoiser(Protocol):
    """Anything that predicts clean-edge probabilities from a noisy graph."""

    schedule: NoiseSchedule

    def denoise(self, a_t: Graph, t: int) -> DenoiserOutput: ...


class EmpiricalDenoiser:
    """Exact Bayes posterior over a finite dataset of same-size graphs.

    Because the forward corruption is independent per pair, the likelihood of
    a dataset graph g given the observed a_t depends only on their Hamming
    distance d: ``beta_bar_t**d * (1-beta_bar_t)**(m-d)``. The posterior over
    dataset graphs (uniform prior, duplicates counted) then yields exact
    per-pair marginals. Weights are accumulated in log space.
    """

    def __init__(self, dataset: GraphBatch, schedule: NoiseSchedule):
        self.n = dataset.uniform_n()
        self.dataset = dataset
        self.schedule = schedule
        self._bits = [g.bits for g in dataset]
        self._edge_matrix = np.stack([g.edge_array() for g in dataset]).astype(np.float64)
        self._cache: dict[tuple[int, int], DenoiserOutput] = {}

    def denoise(self, a_t: Graph, t: int) -> DenoiserOutput:
        if a_t.n != self.n:
            raise ValueError(f"graph has {a_t.n} nodes, dataset has {self.n}")
        if not 1 <= t <= self.schedule.steps:
            raise IndexError(f"step {t} out of range 1..{self.schedule.steps}")
        key = (a_t.bits, t)
        hit = self._cache.get(key)
        if hit is not None:
            return hit

        bb = self.schedule.beta_bar[t]
        m = self._edge_matrix.shape[1]
        dist = np.array([(a_t.bits ^ b).bit_count() for b in self._bits], dtype=np.float64)
        log_w = dist * math.log(bb) + (m - dist) * math.log1p(-bb)
        log_w -= log_w.max()
        w = np.exp(log_w)
        w /= w.sum()
        out = DenoiserOutput.from_probs(w @ self._edge_matrix)

        if len(self._cache) < 1 << 16:
            self._cache[key] = out
        return out
