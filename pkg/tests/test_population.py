import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from groupsieve.population import (GroundTruth, draw_ground_truth,
                                   noiseless_outcome, noiseless_outcomes,
                                   random_partition)
from groupsieve.population import TestRow as Row


def test_draw_forced_full_population():
    truth = draw_ground_truth(5, 5, np.random.default_rng(0))
    assert truth.sick == (0, 1, 2, 3, 4)


def test_draw_rejects_bad_k():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        draw_ground_truth(5, 0, rng)
    with pytest.raises(ValueError):
        draw_ground_truth(5, 6, rng)


def test_draw_uniformity():
    n, k, draws = 10**4, 10, 10**4
    rng = np.random.default_rng(1)
    counts = np.zeros(n, dtype=int)
    for _ in range(draws):
        counts[list(draw_ground_truth(n, k, rng).sick)] += 1
    mean = draws * k / n
    sigma = np.sqrt(draws * (k / n) * (1 - k / n))
    within = np.abs(counts - mean) <= 3 * sigma
    # ~99.7% of indices should sit inside the 3-sigma band
    assert within.mean() > 0.99
    assert counts.sum() == draws * k


def test_noiseless_outcome_or_semantics():
    truth = GroundTruth(n=10, sick=(2, 5))
    assert noiseless_outcome(Row(included=()), truth) == 0
    assert noiseless_outcome(Row(included=(5,)), truth) == 1
    # two sick people still read as 1, not 2
    assert noiseless_outcome(Row(included=(2, 5)), truth) == 1


@given(st.sets(st.integers(min_value=0, max_value=29), max_size=10),
       st.sets(st.integers(min_value=0, max_value=29), max_size=10))
def test_noiseless_outcome_monotone(included, extra):
    truth = GroundTruth(n=30, sick=(3, 17))
    before = noiseless_outcome(Row(included=tuple(included)), truth)
    after = noiseless_outcome(Row(included=tuple(included | extra)), truth)
    assert after >= before


def test_vectorized_outcomes_match_scalar():
    truth = GroundTruth(n=20, sick=(1, 7, 13))
    members = np.arange(10)
    rng = np.random.default_rng(2)
    inclusion = rng.random((50, 10)) < 0.5
    fast = noiseless_outcomes(inclusion, members, truth)
    slow = [noiseless_outcome(Row(included=tuple(members[row])), truth)
            for row in inclusion]
    assert fast.tolist() == slow


def test_partition_single_team():
    part = random_partition(np.arange(10), 1, np.random.default_rng(0))
    assert len(part.teams) == 1
    assert part.teams[0].size == 10


def test_partition_balanced_sizes():
    part = random_partition(np.arange(10), 3, np.random.default_rng(0))
    assert sorted(t.size for t in part.teams) == [3, 3, 4]


def test_partition_clamps_to_singletons():
    part = random_partition(np.arange(4), 9, np.random.default_rng(0))
    assert part.clamped
    assert len(part.teams) == 4
    assert all(t.size == 1 for t in part.teams)


@settings(max_examples=30)
@given(st.integers(min_value=1, max_value=200), st.integers(min_value=1, max_value=50),
       st.integers(min_value=0, max_value=10**6))
def test_partition_disjoint_and_covering(pool_size, team_count, seed):
    pool = np.arange(pool_size)
    part = random_partition(pool, team_count, np.random.default_rng(seed))
    merged = np.sort(np.concatenate([t.members for t in part.teams]))
    assert np.array_equal(merged, pool)
    sizes = [t.size for t in part.teams]
    assert max(sizes) - min(sizes) <= 1


def test_partition_uniformity():
    pool_size, team_count, draws = 10**4, 100, 10**3
    pool = np.arange(pool_size)
    rng = np.random.default_rng(3)
    counts = np.zeros((pool_size, team_count), dtype=np.int32)
    for _ in range(draws):
        part = random_partition(pool, team_count, rng)
        for t_idx, team in enumerate(part.teams):
            counts[team.members, t_idx] += 1
    # chi-square statistic over all cells should land near its df
    expected = draws / team_count
    stat = float(((counts - expected) ** 2 / expected).sum())
    df = pool_size * (team_count - 1)
    assert abs(stat - df) < 6 * np.sqrt(2 * df)


def test_first_round_team_counts_near_poisson():
    # teams of size n/k = 100: empty/exact/twoplus fractions near 1/e, 1/e, 1-2/e
    n, k, trials = 50_000, 500, 40
    rng = np.random.default_rng(4)
    fractions = np.zeros(3)
    for _ in range(trials):
        truth = draw_ground_truth(n, k, rng)
        part = random_partition(np.arange(n), k, rng)
        sick = truth.sick_array
        per_team = np.array([np.isin(sick, t.members).sum() for t in part.teams])
        fractions += [np.mean(per_team == 0), np.mean(per_team == 1),
                      np.mean(per_team >= 2)]
    fractions /= trials
    e_inv = np.exp(-1.0)
    assert abs(fractions[0] - e_inv) < 0.03
    assert abs(fractions[1] - e_inv) < 0.03
    assert abs(fractions[2] - (1 - 2 * e_inv)) < 0.03


def test_team_requires_unique_members():
    from groupsieve.population import Team
    with pytest.raises(ValueError):
        Team(members=np.array([1, 1, 2]))
    with pytest.raises(ValueError):
        Team(members=np.array([], dtype=int))
