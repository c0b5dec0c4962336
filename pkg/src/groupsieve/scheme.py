"""Full protocol: isolation rounds, identification, fallback, and accounting.

``run_scheme`` simulates one end-to-end run against a freshly drawn hidden
truth.  ``decode_only`` re-runs the decoder from a transcript alone, which
is what keeps the simulator and the decoder honestly separated: the decoder
path regenerates all test designs from the recorded design seed and reads
nothing but recorded observations.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from . import identification, isolation
from .channels import Channel, parse_channel_spec
from .identification import BlockLengthPolicy, CONFIRMED, REJECTED
from .isolation import IsolationConfig, IsolationOutcome, required_tests_per_team
from .population import GroundTruth, draw_ground_truth
from .transcript import (LiveSource, ReplaySource, Transcript, TranscriptError,
                         TranscriptExhausted)


@dataclass
class SchemeConfig:
    """Every knob of one scheme execution; serializable for the transcript header."""

    inclusion_fraction: float = 0.5
    tests_per_team: int | None = None
    misclass_target: float | None = None
    max_rounds: int | None = None
    test_budget: int | None = None
    schedule: tuple[int, ...] = (1,)
    s_cap: int = isolation.DEFAULT_S_CAP
    oracle_classifier: bool = False
    block_mode: str = "ratio"
    epsilon: float = 0.5
    multiplier: float = 2.0
    verify: bool = False
    verify_tests: int | None = None

    def __post_init__(self):
        self.schedule = tuple(int(m) for m in self.schedule)
        self.block_policy()  # validate early
        self.isolation_config()

    def isolation_config(self) -> IsolationConfig:
        return IsolationConfig(
            inclusion_fraction=self.inclusion_fraction,
            tests_per_team=self.tests_per_team,
            misclass_target=self.misclass_target,
            max_rounds=self.max_rounds,
            test_budget=self.test_budget,
            schedule=self.schedule,
            s_cap=self.s_cap,
            oracle_classifier=self.oracle_classifier,
        )

    def block_policy(self) -> BlockLengthPolicy:
        return BlockLengthPolicy(mode=self.block_mode, epsilon=self.epsilon,
                                 multiplier=self.multiplier)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["schedule"] = list(self.schedule)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SchemeConfig":
        d = dict(d)
        if "schedule" in d:
            d["schedule"] = tuple(d["schedule"])
        return cls(**d)


@dataclass
class SchemeResult:
    estimate: tuple[int, ...]
    total_tests: int
    rounds: int
    failed: str | None
    fp: int
    fn: int
    tests_isolation: int
    tests_identification: int
    tests_verification: int
    isolation: IsolationOutcome | None = field(default=None, compare=False, repr=False)
    transcript: Transcript | None = field(default=None, compare=False, repr=False)

    def to_row(self) -> dict:
        return {
            "tests_isolation": self.tests_isolation,
            "tests_identification": self.tests_identification,
            "tests_verify": self.tests_verification,
            "tests_total": self.total_tests,
            "rounds": self.rounds,
            "failed": int(self.failed is not None),
            "fp": self.fp,
            "fn": self.fn,
        }


def count_mistakes(estimate, truth: GroundTruth) -> tuple[int, int]:
    """(false positives, false negatives) of an estimated sick set."""
    est = set(int(j) for j in estimate)
    if est and (min(est) < 0 or max(est) >= truth.n):
        raise ValueError("estimate contains out-of-range indices")
    sick = set(truth.sick)
    return len(est - sick), len(sick - est)


def _decode(n: int, k: int, channel: Channel, config: SchemeConfig,
            design_rng: np.random.Generator, source):
    """The decoder-side algorithm, shared by live runs and transcript replay."""
    iso = isolation.isolate(n, k, channel, config.isolation_config(),
                            design_rng, source)
    tests_id = 0
    tests_ver = 0
    rounds = iso.rounds_used

    if iso.failed is not None:
        # statistical failure: report k random people (a legal, counted outcome)
        estimate = tuple(sorted(int(j) for j in
                                design_rng.choice(n, size=k, replace=False)))
        return estimate, iso, tests_id, tests_ver, rounds

    policy = config.block_policy()
    teams = iso.exact_teams
    candidates, tests_id = identification.identify_teams(
        teams, channel, policy, n, k, design_rng, source)
    rounds += 1
    final = list(candidates)

    if config.verify:
        s_verify = config.verify_tests
        if s_verify is None:
            resolved = config.isolation_config().resolve(channel, k)
            s_verify = required_tests_per_team(
                channel, k, config.inclusion_fraction, resolved.misclass_target,
                s_cap=config.s_cap)
        statuses = identification.verify_candidates(candidates, channel,
                                                    s_verify, source)
        tests_ver = s_verify * len(candidates)
        rejected = [i for i, st in enumerate(statuses) if st == REJECTED]
        redo, re_tests = identification.identify_teams(
            [teams[i] for i in rejected], channel, policy, n, k,
            design_rng, source)
        tests_ver += re_tests
        rounds += 2
        final = [c for c, st in zip(candidates, statuses) if st == CONFIRMED]
        for i, fresh in zip(rejected, redo):
            # a repeat of the rejected answer is taken as a bad team, not a retry win
            if fresh != candidates[i]:
                final.append(fresh)

    estimate = tuple(sorted(set(final)))
    return estimate, iso, tests_id, tests_ver, rounds


def _seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def run_scheme(n: int, k: int, channel: Channel, config: SchemeConfig, seed,
               record_transcript: bool = True) -> SchemeResult:
    """One seeded end-to-end run; deterministic given (n, k, channel, config, seed)."""
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    root = _seed_sequence(seed)
    truth_ss, design_ss, noise_ss = root.spawn(3)
    truth = draw_ground_truth(n, k, np.random.default_rng(truth_ss))

    transcript = None
    if record_transcript:
        transcript = Transcript(header={
            "n": n,
            "k": k,
            "channel": channel.spec,
            "config": config.to_dict(),
            "design_entropy": _entropy_to_json(design_ss.entropy),
            "design_key": list(design_ss.spawn_key),
        })
    source = LiveSource(truth, channel, noise_rng=np.random.default_rng(noise_ss),
                        transcript=transcript)
    design_rng = np.random.default_rng(design_ss)

    estimate, iso, tests_id, tests_ver, rounds = _decode(
        n, k, channel, config, design_rng, source)
    iso.sick_exit_rounds = dict(source.sick_exit_round) or None
    fp, fn = count_mistakes(estimate, truth)
    return SchemeResult(
        estimate=estimate,
        total_tests=iso.isolation_tests_used + tests_id + tests_ver,
        rounds=rounds,
        failed=iso.failed,
        fp=fp,
        fn=fn,
        tests_isolation=iso.isolation_tests_used,
        tests_identification=tests_id,
        tests_verification=tests_ver,
        isolation=iso,
        transcript=transcript,
    )


def _entropy_to_json(entropy):
    if isinstance(entropy, (int, np.integer)):
        return int(entropy)
    return [int(v) for v in entropy]


def _entropy_from_json(value):
    if isinstance(value, list):
        return tuple(int(v) for v in value)
    return int(value)


def decode_only(transcript: Transcript | str) -> tuple[int, ...]:
    """Reproduce the sick-set estimate from a transcript and public parameters.

    Only the header (public parameters plus the design seed) and the recorded
    observations are consulted; the ground truth never enters.  A tampered
    transcript may yield a different estimate but still decodes to completion.
    """
    if isinstance(transcript, (str, bytes)) or hasattr(transcript, "__fspath__"):
        transcript = Transcript.load_jsonl(transcript)
    header = transcript.header
    try:
        n = int(header["n"])
        k = int(header["k"])
        channel = parse_channel_spec(header["channel"])
        config = SchemeConfig.from_dict(header["config"])
        design_ss = np.random.SeedSequence(
            entropy=_entropy_from_json(header["design_entropy"]),
            spawn_key=tuple(header["design_key"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise TranscriptError(f"bad transcript header: {exc}") from exc
    if config.oracle_classifier:
        raise TranscriptError("oracle-classified runs are simulator diagnostics "
                              "and cannot be replayed")
    design_rng = np.random.default_rng(design_ss)
    source = ReplaySource(transcript)
    try:
        estimate, *_ = _decode(n, k, channel, config, design_rng, source)
    except TranscriptExhausted:
        # truncated or inconsistent record: fall back to the failure output
        estimate = tuple(sorted(int(j) for j in
                                design_rng.choice(n, size=k, replace=False)))
    return estimate
