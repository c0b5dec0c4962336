"""Identifying the sick member of each exact team with random codewords.

Every member of a team is assigned a distinct random binary codeword; test i
pools exactly the members whose codeword bit i is one, so the noiseless
outcome vector equals the sick member's codeword.  Decoding is exhaustive
maximum likelihood over the team's codewords, which is exact at desk scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channels import Channel

_REBUILD_ATTEMPTS = 10_000


@dataclass(frozen=True)
class BlockLengthPolicy:
    """How many tests a team gets: Ratio scales log2(team size), FullLog log2(n)."""

    mode: str = "ratio"        # "ratio" | "fulllog"
    epsilon: float = 0.5       # Ratio head-room over 1/C(Z)
    multiplier: float = 2.0    # FullLog coefficient c

    def __post_init__(self):
        if self.mode not in ("ratio", "fulllog"):
            raise ValueError(f"unknown block length mode {self.mode!r}")
        if self.epsilon < 0.0:
            raise ValueError("epsilon must be nonnegative")
        if self.multiplier <= 0.0:
            raise ValueError("multiplier must be positive")


@dataclass(frozen=True)
class Codebook:
    team_size: int
    block_length: int
    words: np.ndarray  # (team_size x block_length) uint8, pairwise distinct

    def __post_init__(self):
        if self.words.shape != (self.team_size, self.block_length):
            raise ValueError("codeword array shape mismatch")


def block_length(policy: BlockLengthPolicy, team_size: int, n: int,
                 channel: Channel) -> int:
    """Tests per team under the policy, rounded up; always at least 1."""
    if team_size < 1:
        raise ValueError("team size must be positive")
    c = channel.capacity()
    if c <= 0.0:
        raise ValueError("channel capacity is zero; identification impossible")
    if policy.mode == "ratio":
        raw = (1.0 + policy.epsilon) * math.log2(team_size) / c
    else:
        raw = policy.multiplier * math.log2(n) / c
    return max(1, math.ceil(raw))


def build_codebook(team_size: int, length: int, rng: np.random.Generator) -> Codebook:
    """team_size iid Bernoulli(1/2) codewords, resampled until pairwise distinct."""
    if team_size < 1 or length < 1:
        raise ValueError("team size and block length must be positive")
    if team_size > 2 ** length:
        raise ValueError(
            f"block length {length} too short for {team_size} distinct codewords")
    words = rng.integers(0, 2, size=(team_size, length), dtype=np.uint8)
    for _ in range(_REBUILD_ATTEMPTS):
        seen: dict[bytes, int] = {}
        dup_rows = []
        for i in range(team_size):
            key = words[i].tobytes()
            if key in seen:
                dup_rows.append(i)
            else:
                seen[key] = i
        if not dup_rows:
            return Codebook(team_size=team_size, block_length=length, words=words)
        words[dup_rows] = rng.integers(0, 2, size=(len(dup_rows), length),
                                       dtype=np.uint8)
    raise RuntimeError("could not draw distinct codewords")  # pragma: no cover


#: scores this close count as tied, so float summation order cannot flip a tie
SCORE_TIE_TOLERANCE = 1e-9


def decode_team(codebook: Codebook, observations: np.ndarray,
                channel: Channel) -> int:
    """Index of the ML codeword; ties break to the lowest member index."""
    ll1 = channel.log_density(observations, 1)
    ll0 = channel.log_density(observations, 0)
    scores = np.where(codebook.words.astype(bool), ll1, ll0).sum(axis=1)
    best = scores.max()
    return int(np.argmax(scores >= best - SCORE_TIE_TOLERANCE))


def identify_teams(exact_teams, channel: Channel, policy: BlockLengthPolicy,
                   n: int, k: int, design_rng: np.random.Generator,
                   source) -> tuple[list[int], int]:
    """One identification round over all exact teams.

    All teams share the nominal block length computed at team size n/k (the
    first-round team size; later exact teams are never larger in practice).
    A team that still outgrows 2^length gets its length bumped to fit.
    Returns the identified person per team and the tests spent.
    """
    nominal = max(1, math.ceil(n / k))
    base_length = block_length(policy, nominal, n, channel)
    identified: list[int] = []
    tests = 0
    source.begin_round("identification")
    for team in exact_teams:
        length = base_length
        if team.size > 2 ** length:
            length = math.ceil(math.log2(team.size)) + 1
        codebook = build_codebook(team.size, length, design_rng)
        inclusion = codebook.words.T.astype(bool)  # test i pools the bit-i ones
        obs = source.respond(team.members, inclusion)
        winner = decode_team(codebook, obs, channel)
        identified.append(int(team.members[winner]))
        tests += length
    source.end_round()
    return identified, tests


def run_identification(exact_teams, channel: Channel, policy: BlockLengthPolicy,
                       truth, rng: np.random.Generator,
                       transcript=None) -> list[int]:
    """Simulate the identification round against a hidden truth."""
    from .transcript import LiveSource

    seeds = rng.spawn(2)
    source = LiveSource(truth, channel, noise_rng=seeds[1], transcript=transcript)
    identified, _ = identify_teams(exact_teams, channel, policy, truth.n,
                                   truth.k, design_rng=seeds[0], source=source)
    return identified


CONFIRMED = "confirmed"
REJECTED = "rejected"


def verify_candidates(candidates, channel: Channel, s_verify: int,
                      source) -> list[str]:
    """Test each candidate alone s_verify times; ML between mu1 and mu0 decides."""
    if s_verify < 1:
        raise ValueError("verification test count must be positive")
    statuses = []
    source.begin_round("verification")
    for person in candidates:
        members = np.array([person])
        inclusion = np.ones((s_verify, 1), dtype=bool)
        obs = source.respond(members, inclusion)
        ll_sick = float(channel.log_density(obs, 1).sum())
        ll_healthy = float(channel.log_density(obs, 0).sum())
        statuses.append(CONFIRMED if ll_sick >= ll_healthy else REJECTED)
    source.end_round()
    return statuses
