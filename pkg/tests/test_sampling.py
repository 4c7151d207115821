from collections import Counter

import numpy as np
import pytest

from graphdiff.denoiser import EmpiricalDenoiser
from graphdiff.graphs import Graph, GraphBatch, pair_count
from graphdiff.sampling import (
    SampleConfig,
    chain_for_index,
    reverse_chain,
    sample_batch,
    sample_prior,
    sample_simple,
    sample_vb,
)
from graphdiff.schedule import linear_schedule
from graphdiff.seeding import derive_rng


def test_sample_prior_edge_cases():
    rng = derive_rng(0, "prior")
    assert sample_prior(1, rng) == Graph(1)
    a = sample_prior(10, derive_rng(1, "prior"))
    b = sample_prior(10, derive_rng(1, "prior"))
    assert a == b
    with pytest.raises(ValueError):
        sample_prior(0, rng)


def test_sample_prior_density():
    rng = derive_rng(2, "prior-density")
    m = pair_count(40)
    total = sum(sample_prior(40, rng).edge_count for _ in range(100))
    freq = total / (100 * m)
    assert abs(freq - 0.5) <= 0.01


def test_sample_config_validation():
    with pytest.raises(ValueError):
        SampleConfig(count=0, seed=1, nodes=4)
    with pytest.raises(ValueError):
        SampleConfig(count=1, seed=1)
    with pytest.raises(ValueError):
        SampleConfig(count=1, seed=1, nodes=4, node_counts=(4,))
    with pytest.raises(ValueError):
        SampleConfig(count=1, seed=1, nodes=0)


def one_point_denoiser(T=8):
    g = Graph.from_edges(4, [(0, 1), (1, 2), (2, 3)])
    return g, EmpiricalDenoiser(GraphBatch((g,)), linear_schedule(T))


def test_schedule_mismatch_errors():
    _, den = one_point_denoiser(T=8)
    with pytest.raises(ValueError, match="steps"):
        sample_batch(den, SampleConfig(count=1, seed=0, nodes=4, steps=16), "vb")
    with pytest.raises(ValueError, match="schedule"):
        sample_batch(den, SampleConfig(count=1, seed=0, nodes=4, schedule="cosine"), "vb")
    with pytest.raises(ValueError):
        sample_batch(den, SampleConfig(count=1, seed=0, nodes=4), "ddim")


def test_single_graph_oracle_recovers_it():
    g, den = one_point_denoiser(T=8)
    for sampler in (sample_vb, sample_simple):
        batch = sampler(den, SampleConfig(count=1000, seed=11, nodes=4))
        hits = sum(1 for s in batch if s == g)
        assert hits >= 990


def test_t1_degenerate_chain_returns_prediction():
    g, den = one_point_denoiser(T=1)
    batch = sample_simple(den, SampleConfig(count=50, seed=3, nodes=4))
    assert all(s == g for s in batch)
    batch = sample_vb(den, SampleConfig(count=50, seed=3, nodes=4))
    assert all(s == g for s in batch)


def test_sampling_is_deterministic_and_indexed():
    _, den = one_point_denoiser()
    cfg = SampleConfig(count=8, seed=21, nodes=4)
    a = sample_simple(den, cfg)
    b = sample_simple(den, cfg)
    assert a.graphs == b.graphs
    for i in range(8):
        again, _ = chain_for_index(den, cfg, "simple", i)
        assert again == a[i]
    threaded = sample_batch(den, cfg, "simple", threads=4)
    assert threaded.graphs == a.graphs


def test_different_seeds_differ():
    _, den = one_point_denoiser()
    graphs = GraphBatch((Graph(4, 5), Graph(4, 40), Graph(4, 18)))
    den = EmpiricalDenoiser(graphs, linear_schedule(8))
    a = sample_simple(den, SampleConfig(count=30, seed=1, nodes=4))
    b = sample_simple(den, SampleConfig(count=30, seed=2, nodes=4))
    assert a.graphs != b.graphs


def test_node_count_policy_draws_from_population():
    g = Graph.from_edges(4, [(0, 1)])
    den = EmpiricalDenoiser(GraphBatch((g,)), linear_schedule(4))
    # population has only n=4 so the oracle stays usable
    cfg = SampleConfig(count=5, seed=5, node_counts=(4, 4, 4))
    batch = sample_simple(den, cfg)
    assert set(batch.node_counts()) == {4}


def test_trajectory_records_every_timestep():
    _, den = one_point_denoiser(T=8)
    final, traj = reverse_chain(den, "simple", 4, derive_rng(6, "traj"), keep_trajectory=True)
    ts = [t for t, _ in traj]
    assert ts == list(range(8, -1, -1))
    assert traj[-1][1] == final


def test_prior_state_frequency_chi_squared():
    # edge frequency at t=T is 1/2 regardless of the (ignored) dataset
    from scipy.stats import chi2

    rng = derive_rng(7, "prior-chi2")
    m = pair_count(60)
    reps = 60
    ones = sum(sample_prior(60, rng).edge_count for _ in range(reps))
    total = m * reps
    freq = ones / total
    assert abs(freq - 0.5) <= 0.01
    statistic = (ones - total / 2) ** 2 / (total / 2) + (
        (total - ones) - total / 2
    ) ** 2 / (total / 2)
    assert chi2.sf(statistic, df=1) > 0.001


@pytest.mark.slow
def test_distribution_recovery_hamming_adjacent_pair():
    # triangle vs paw differ in one edge, making the factorized reverse exact;
    # the sampled distribution then converges at the statistical rate
    tri = Graph.from_edges(4, [(0, 1), (0, 3), (1, 3)])
    paw = Graph.from_edges(4, [(0, 1), (0, 3), (1, 3), (2, 3)])
    dataset = GraphBatch((tri, paw))
    den = EmpiricalDenoiser(dataset, linear_schedule(32))
    data_p = np.zeros(64)
    for g in dataset:
        data_p[g.bits] += 0.5

    for count, bound in ((10_000, 0.05), (100_000, 0.02)):
        batch = sample_simple(den, SampleConfig(count=count, seed=13, nodes=4))
        emp = np.zeros(64)
        for bits, c in Counter(g.bits for g in batch).items():
            emp[bits] = c / count
        tv = 0.5 * np.abs(emp - data_p).sum()
        assert tv <= bound
    batch = sample_vb(den, SampleConfig(count=10_000, seed=14, nodes=4))
    emp = np.zeros(64)
    for bits, c in Counter(g.bits for g in batch).items():
        emp[bits] = c / 10_000
    assert 0.5 * np.abs(emp - data_p).sum() <= 0.05
