"""Hidden ground truth, team partitions, and the OR semantics of pooled tests."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class TeamLabel(enum.Enum):
    UNCLASSIFIED = "unclassified"
    EMPTY = "empty"
    EXACT = "exact"
    TWOPLUS = "twoplus"


@dataclass(frozen=True)
class GroundTruth:
    """Population size and the hidden sick set; never shown to the decoder."""

    n: int
    sick: tuple[int, ...]  # sorted person indices

    def __post_init__(self):
        if len(set(self.sick)) != len(self.sick):
            raise ValueError("sick set contains duplicates")
        if not 1 <= len(self.sick) <= self.n:
            raise ValueError(f"need 1 <= k <= n, got k={len(self.sick)}, n={self.n}")
        if self.sick and (min(self.sick) < 0 or max(self.sick) >= self.n):
            raise ValueError("sick indices out of range")
        if tuple(sorted(self.sick)) != tuple(self.sick):
            raise ValueError("sick set must be sorted")

    @property
    def k(self) -> int:
        return len(self.sick)

    @property
    def sick_array(self) -> np.ndarray:
        return np.asarray(self.sick)


@dataclass
class Team:
    members: np.ndarray
    label: TeamLabel = TeamLabel.UNCLASSIFIED

    def __post_init__(self):
        self.members = np.asarray(self.members)
        if self.members.size == 0:
            raise ValueError("a team must be nonempty")
        if len(np.unique(self.members)) != self.members.size:
            raise ValueError("team members must be duplicate-free")

    @property
    def size(self) -> int:
        return int(self.members.size)


@dataclass
class TeamPartition:
    """The per-round grouping of the unresolved pool into teams."""

    round_index: int
    teams: list[Team]
    pool: np.ndarray
    clamped: bool = False  # team count was clamped down to the pool size

    def __post_init__(self):
        self.pool = np.asarray(self.pool)
        merged = np.concatenate([t.members for t in self.teams])
        if merged.size != self.pool.size:
            raise ValueError("teams do not partition the pool")
        if not np.array_equal(np.sort(merged), np.sort(self.pool)):
            raise ValueError("teams are not disjoint or do not cover the pool")


@dataclass(frozen=True)
class TestRow:
    """One test: the set of persons included in the pool (stored sparsely)."""

    included: tuple[int, ...]


def draw_ground_truth(n: int, k: int, rng: np.random.Generator) -> GroundTruth:
    """Uniform size-k sick subset of [0, n)."""
    if k < 1 or k > n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    sick = rng.choice(n, size=k, replace=False)
    return GroundTruth(n=n, sick=tuple(int(j) for j in np.sort(sick)))


def noiseless_outcome(row: TestRow, truth: GroundTruth) -> int:
    """1 iff the test pool meets the sick set; ORs collapse counts above 1."""
    return int(bool(set(row.included) & set(truth.sick)))


def noiseless_outcomes(inclusion: np.ndarray, members: np.ndarray,
                       truth: GroundTruth) -> np.ndarray:
    """Vectorized OR outcomes for a block of tests over one team.

    ``inclusion`` is a (tests x team size) boolean matrix aligned with
    ``members`` (global person indices).
    """
    sick_mask = np.isin(members, truth.sick_array, assume_unique=False)
    if not sick_mask.any():
        return np.zeros(inclusion.shape[0], dtype=np.uint8)
    return inclusion[:, sick_mask].any(axis=1).astype(np.uint8)


def random_partition(pool: np.ndarray, team_count: int, rng: np.random.Generator,
                     round_index: int = 0) -> TeamPartition:
    """Uniformly random balanced partition; team sizes differ by at most 1.

    A team count above the pool size is clamped to the pool size (singleton
    teams) and flagged so the round record can note the clamp.
    """
    pool = np.asarray(pool)
    if pool.size == 0:
        raise ValueError("cannot partition an empty pool")
    if team_count < 1:
        raise ValueError(f"team count must be positive, got {team_count}")
    clamped = team_count > pool.size
    if clamped:
        team_count = int(pool.size)
    shuffled = rng.permutation(pool)
    teams = [Team(members=chunk) for chunk in np.array_split(shuffled, team_count)]
    return TeamPartition(round_index=round_index, teams=teams, pool=pool,
                         clamped=clamped)
