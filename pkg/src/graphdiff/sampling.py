"""Graph generation by reversing the edge-flip chain.

Two samplers, matched to the two training losses. Both start from an
Erdős–Rényi prior with edge probability 1/2. The variational-bound sampler
draws each A_{t-1} from the model's reverse marginal; the simple sampler
instead draws a clean-graph proposal from the model at every step and
re-noises it to level t-1. In both, the final step samples A_0 directly from
the model prediction. Every output graph consumes its own RNG stream derived
from (seed, graph index), so batches are order-independent and parallel-safe.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .denoiser import Denoiser
from .diffusion import reverse_marginal
from .graphs import Graph, GraphBatch, pair_count
from .seeding import derive_rng

__all__ = [
    "SampleConfig",
    "sample_prior",
    "reverse_chain",
    "chain_for_index",
    "sample_batch",
    "sample_vb",
    "sample_simple",
]

ALGORITHMS = ("vb", "simple")


@dataclass(frozen=True)
class SampleConfig:
    """How many graphs to draw and how to pick their node counts.

    Exactly one of ``nodes`` (fixed size) or ``node_counts`` (an empirical
    population to draw from, typically the training set's sizes) must be set.
    ``steps``/``schedule``, when given, are cross-checked against the
    denoiser's own schedule.
    """

    count: int
    seed: int
    nodes: int | None = None
    node_counts: tuple[int, ...] | None = None
    steps: int | None = None
    schedule: str | None = None

    def __post_init__(self):
        if self.count < 1:
            raise ValueError(f"sample count must be >= 1, got {self.count}")
        if (self.nodes is None) == (self.node_counts is None):
            raise ValueError("set exactly one of nodes / node_counts")
        if self.nodes is not None and self.nodes < 1:
            raise ValueError("fixed node count must be >= 1")
        if self.node_counts is not None and not self.node_counts:
            raise ValueError("node_counts must be non-empty")


def sample_prior(n: int, rng: np.random.Generator) -> Graph:
    """Erdős–Rényi graph with edge probability 1/2 (the chain's endpoint)."""
    if n < 1:
        raise ValueError(f"node count must be >= 1, got {n}")
    return Graph.from_edge_array(n, rng.random(pair_count(n)) < 0.5)


def reverse_chain(
    denoiser: Denoiser,
    algorithm: str,
    n: int,
    rng: np.random.Generator,
    keep_trajectory: bool = False,
) -> tuple[Graph, list[tuple[int, Graph]]]:
    """Run one full reverse trajectory; returns (sample, [(t, A_t), ...]).

    The trajectory (recorded only on request) holds the chain state at every
    timestep from T down to 0.
    """
    if algorithm not in ALGORITHMS:
        raise ValueError(f"algorithm must be one of {ALGORITHMS}, got {algorithm!r}")
    schedule = denoiser.schedule
    T = schedule.steps
    m = pair_count(n)
    g = sample_prior(n, rng)
    trajectory: list[tuple[int, Graph]] = [(T, g)] if keep_trajectory else []

    for t in range(T, 1, -1):
        probs = denoiser.denoise(g, t).probs
        if algorithm == "vb":
            p_prev = reverse_marginal(schedule, t, g.edge_array(), probs)
            arr = rng.random(m) < p_prev
        else:
            proposal = rng.random(m) < probs
            flips = rng.random(m) < schedule.beta_bar[t - 1]
            arr = proposal ^ flips
        g = Graph.from_edge_array(n, arr)
        if keep_trajectory:
            trajectory.append((t - 1, g))

    probs = denoiser.denoise(g, 1).probs
    g = Graph.from_edge_array(n, rng.random(m) < probs)
    if keep_trajectory:
        trajectory.append((0, g))
    return g, trajectory


def _node_count(config: SampleConfig, rng: np.random.Generator) -> int:
    if config.nodes is not None:
        return config.nodes
    counts = config.node_counts
    return int(counts[rng.integers(len(counts))])


def _check_compatible(denoiser: Denoiser, config: SampleConfig) -> None:
    if config.steps is not None and config.steps != denoiser.schedule.steps:
        raise ValueError(
            f"config asks for {config.steps} steps but the denoiser was built "
            f"for {denoiser.schedule.steps}"
        )
    if config.schedule is not None and config.schedule != denoiser.schedule.kind:
        raise ValueError(
            f"config asks for a {config.schedule!r} schedule but the denoiser "
            f"uses {denoiser.schedule.kind!r}"
        )


def chain_for_index(
    denoiser: Denoiser,
    config: SampleConfig,
    algorithm: str,
    index: int,
    keep_trajectory: bool = False,
) -> tuple[Graph, list[tuple[int, Graph]]]:
    """Reproduce the chain of one batch slot (its stream depends only on index)."""
    _check_compatible(denoiser, config)
    rng = derive_rng(config.seed, "sample", index)
    n = _node_count(config, rng)
    return reverse_chain(denoiser, algorithm, n, rng, keep_trajectory)


def sample_batch(
    denoiser: Denoiser,
    config: SampleConfig,
    algorithm: str,
    threads: int = 1,
) -> GraphBatch:
    """Draw ``config.count`` independent samples, in deterministic order."""
    _check_compatible(denoiser, config)

    def one(index: int) -> Graph:
        return chain_for_index(denoiser, config, algorithm, index)[0]

    indices = range(config.count)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            graphs = tuple(pool.map(one, indices))
    else:
        graphs = tuple(one(i) for i in indices)
    return GraphBatch(graphs)


def sample_vb(denoiser: Denoiser, config: SampleConfig, threads: int = 1) -> GraphBatch:
    """Sampler paired with the variational-bound loss."""
    return sample_batch(denoiser, config, "vb", threads)


def sample_simple(denoiser: Denoiser, config: SampleConfig, threads: int = 1) -> GraphBatch:
    """Sampler paired with the simple (reweighted cross-entropy) loss."""
    return sample_batch(denoiser, config, "simple", threads)
