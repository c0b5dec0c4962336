"""Isolating rounds: per-team test design, three-way classification, merge loop.

Each round partitions the unresolved pool into teams, spends s tests per
team, and classifies every team as empty / exact / twoplus by maximum
likelihood over the three mixture hypotheses.  Twoplus teams are merged and
re-divided until none remain, or until the round cap or test budget trips.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import channels
from .channels import BscChannel, Channel, DegenerateChannelError
from .population import Team, TeamLabel, random_partition

#: formula blows past this s -> the channel is too noisy to size tests for
DEFAULT_S_CAP = 10**7

#: safety factor over the Chernoff-Stein exponent on the generic channel path
CHERNOFF_SAFETY = 4

ROUND_CAP_FAILURE = "round_cap"
TEST_BUDGET_FAILURE = "test_budget"


@dataclass
class IsolationConfig:
    inclusion_fraction: float = 0.5
    tests_per_team: int | None = None      # None -> required_tests_per_team
    misclass_target: float | None = None   # None -> k**-3
    max_rounds: int | None = None          # None -> ceil(3 ln k / ln 1.5) + 2
    test_budget: int | None = None         # None -> 4 * k * s
    schedule: tuple[int, ...] = (1,)
    s_cap: int = DEFAULT_S_CAP
    oracle_classifier: bool = False        # truth-based labels, diagnostics only

    def __post_init__(self):
        if not 0.0 < self.inclusion_fraction < 1.0:
            raise ValueError("inclusion fraction must lie in (0, 1)")
        if self.tests_per_team is not None and self.tests_per_team < 1:
            raise ValueError("tests per team must be positive")
        if self.max_rounds is not None and self.max_rounds < 1:
            raise ValueError("round cap must be positive")
        if not self.schedule or any(m < 1 for m in self.schedule):
            raise ValueError("schedule multipliers must be positive")
        self.schedule = tuple(int(m) for m in self.schedule)

    def resolve(self, channel: Channel, k: int) -> "ResolvedIsolation":
        delta = (self.misclass_target if self.misclass_target is not None
                 else _default_misclass_target(k))
        s = self.tests_per_team
        if s is None:
            s = required_tests_per_team(channel, k, self.inclusion_fraction,
                                        delta, s_cap=self.s_cap)
        max_rounds = self.max_rounds
        if max_rounds is None:
            max_rounds = default_round_cap(k)
        budget = self.test_budget
        if budget is None:
            budget = 4 * k * s
        if budget < k * s:
            raise ValueError("test budget below one full first round")
        return ResolvedIsolation(tests_per_team=s, misclass_target=delta,
                                 max_rounds=max_rounds, test_budget=budget)


@dataclass(frozen=True)
class ResolvedIsolation:
    tests_per_team: int
    misclass_target: float
    max_rounds: int
    test_budget: int


@dataclass
class RoundRecord:
    round_index: int
    team_count: int
    labels: list[TeamLabel]
    tests_spent: int
    clamped: bool = False


@dataclass
class IsolationOutcome:
    exact_teams: list[Team]
    rounds_used: int
    isolation_tests_used: int
    failed: str | None               # None | "round_cap" | "test_budget"
    records: list[RoundRecord] = field(default_factory=list)
    tests_per_team: int = 0
    sick_exit_rounds: dict[int, int] | None = None  # simulator-side diagnostic


def _default_misclass_target(k: int) -> float:
    """k^-3, clamped so the k = 1 edge case stays a valid probability."""
    return max(k, 2) ** -3.0


def default_round_cap(k: int) -> int:
    """Round cap making P(any sick person outlasts it) <= 1/k^2.

    The per-round survival probability of a sick person in a twoplus team is
    at most 2/3, so 3 ln(k)/ln(3/2) rounds push the per-person tail below
    k^-3; two extra rounds absorb small-k slack.
    """
    if k <= 1:
        return 3
    return math.ceil(3.0 * math.log(k) / math.log(1.5)) + 2


def required_tests_per_team(channel: Channel, k: int, f: float = 0.5,
                            misclass_target: float | None = None,
                            s_cap: int = DEFAULT_S_CAP) -> int:
    """Tests per team sizing the three-way classifier error below the target.

    BSC at f = 1/2 uses the Hoeffding sizing with worst half-gap (1-2p)/8
    between the exact mean 1/2 and the twoplus mean 3/4 - p/2:
    s = ceil(32 (ln(1/delta) + ln 4) / (1-2p)^2).  Other channels fall back
    to the Chernoff-Stein exponent D(Z) with a fixed safety factor.
    """
    if misclass_target is None:
        misclass_target = _default_misclass_target(k)
    if not 0.0 < misclass_target < 1.0:
        raise ValueError("misclassification target must lie in (0, 1)")
    log_term = math.log(1.0 / misclass_target) + math.log(4.0)
    if isinstance(channel, BscChannel) and f == 0.5:
        gap = 1.0 - 2.0 * channel.p
        s = math.ceil(32.0 * log_term / (gap * gap))
    else:
        d = channels.separation_exponent(channel, f)  # raises if degenerate
        s = CHERNOFF_SAFETY * math.ceil(log_term / d)
    if s > s_cap:
        raise ValueError(f"required tests per team {s} exceeds cap {s_cap}")
    return max(1, s)


def design_team_tests(team_size: int, s: int, f: float,
                      rng: np.random.Generator) -> np.ndarray:
    """(s x team_size) boolean inclusion matrix, entries iid Bernoulli(f)."""
    if team_size < 1 or s < 1:
        raise ValueError("team size and test count must be positive")
    if f == 0.5:
        return rng.integers(0, 2, size=(s, team_size), dtype=np.uint8) != 0
    return rng.random((s, team_size)) < f


_LABEL_ORDER = (TeamLabel.EMPTY, TeamLabel.EXACT, TeamLabel.TWOPLUS)


def classify_team(observations: np.ndarray, channel: Channel, f: float = 0.5) -> TeamLabel:
    """ML label over the empty / exact / twoplus mixture hypotheses.

    Ties break toward the larger sick count (twoplus > exact > empty): a
    false twoplus only costs extra tests, a false empty loses a sick person
    for good.
    """
    observations = np.asarray(observations)
    if observations.size == 0:
        raise ValueError("need at least one observation to classify")
    totals = hypothesis_log_likelihoods(observations, channel, f)
    best = 0
    for h in (1, 2):
        if totals[h] >= totals[best]:
            best = h
    return _LABEL_ORDER[best]


def hypothesis_log_likelihoods(observations: np.ndarray, channel: Channel,
                               f: float) -> np.ndarray:
    """Total log-likelihood of the observations under each team hypothesis."""
    weights = channels.hypothesis_weights(f)
    if channel.is_discrete:
        # sufficient statistic: per-symbol counts
        idx = channel.symbol_index(observations)
        counts = np.bincount(idx, minlength=len(channel.alphabet))
        rows = np.array([channel.law(0), channel.law(1)], dtype=float)
        totals = np.empty(3)
        for h, (w0, w1) in enumerate(weights):
            mix = w0 * rows[0] + w1 * rows[1]
            total = 0.0
            for c, m in zip(counts, mix):
                if c == 0:
                    continue
                total += c * math.log(m) if m > 0.0 else -math.inf
            totals[h] = total
        return totals
    return np.array([
        float(channel.mixture_log_likelihood(observations, w0, w1).sum())
        for (w0, w1) in weights
    ])


def bsc_labels_by_count(channel: BscChannel, s: int, f: float = 0.5) -> list[TeamLabel]:
    """classify_team's decision as a function of the positive-test count."""
    labels = []
    for c in range(s + 1):
        obs = np.concatenate([np.ones(c, dtype=np.uint8),
                              np.zeros(s - c, dtype=np.uint8)])
        labels.append(classify_team(obs, channel, f))
    return labels


def team_schedule(k_q: int, round_index: int, schedule: tuple[int, ...] = (1,)) -> int:
    """Team count for a round: the schedule multiplier times the sick estimate.

    The first round always runs at multiplier 1; round q >= 1 uses the
    schedule's (q-1)th multiplier, repeating the last entry.
    """
    if k_q < 1:
        raise ValueError("sick-count estimate must be positive")
    if round_index == 0:
        return k_q
    mult = schedule[min(round_index - 1, len(schedule) - 1)]
    return mult * k_q


def isolate(n: int, k: int, channel: Channel, config: IsolationConfig,
            design_rng: np.random.Generator, source) -> IsolationOutcome:
    """Run the merge/re-divide loop against an observation source.

    The adaptive decisions depend only on the source's observation arrays
    (or, in oracle mode, on its true sick counts), so the same code path
    serves both live simulation and transcript replay.
    """
    resolved = config.resolve(channel, k)
    s = resolved.tests_per_team
    f = config.inclusion_fraction

    pool = np.arange(n)
    exact_teams: list[Team] = []
    records: list[RoundRecord] = []
    tests_used = 0
    rounds_used = 0
    failed = None
    q = 0

    while True:
        if q >= resolved.max_rounds:
            failed = ROUND_CAP_FAILURE
            break
        k_estimate = max(1, k - len(exact_teams))
        desired_teams = team_schedule(k_estimate, q, config.schedule)
        team_count = min(desired_teams, int(pool.size))
        if tests_used + team_count * s > resolved.test_budget:
            failed = TEST_BUDGET_FAILURE
            break

        partition = random_partition(pool, desired_teams, design_rng, round_index=q)
        source.begin_round("isolation")
        labels = []
        for team in partition.teams:
            if config.oracle_classifier:
                sick_count = source.true_sick_count(team.members)
                label = (TeamLabel.EMPTY if sick_count == 0
                         else TeamLabel.EXACT if sick_count == 1
                         else TeamLabel.TWOPLUS)
            else:
                inclusion = design_team_tests(team.size, s, f, design_rng)
                obs = source.respond(team.members, inclusion)
                label = classify_team(obs, channel, f)
            team.label = label
            labels.append(label)
        source.end_round()
        source.note_labels(q, partition.teams, labels)

        tests_used += len(partition.teams) * s
        rounds_used += 1
        records.append(RoundRecord(round_index=q, team_count=len(partition.teams),
                                   labels=labels, tests_spent=len(partition.teams) * s,
                                   clamped=partition.clamped))

        exact_teams.extend(t for t in partition.teams if t.label is TeamLabel.EXACT)
        twoplus = [t for t in partition.teams if t.label is TeamLabel.TWOPLUS]
        if not twoplus:
            break
        pool = np.concatenate([t.members for t in twoplus])
        q += 1

    return IsolationOutcome(
        exact_teams=exact_teams,
        rounds_used=rounds_used,
        isolation_tests_used=tests_used,
        failed=failed,
        records=records,
        tests_per_team=s,
        sick_exit_rounds=dict(getattr(source, "sick_exit_round", None) or {}) or None,
    )


def run_isolation(truth, channel: Channel, config: IsolationConfig,
                  rng: np.random.Generator, transcript=None) -> IsolationOutcome:
    """Simulate isolation against a hidden truth with a caller-owned stream."""
    from .transcript import LiveSource

    seeds = rng.spawn(2)
    source = LiveSource(truth, channel, noise_rng=seeds[1], transcript=transcript)
    return isolate(truth.n, truth.k, channel, config, design_rng=seeds[0],
                   source=source)
