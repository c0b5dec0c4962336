"""Adaptive group testing over noisy channels: isolate teams, then identify.

The scheme partitions the population into teams and re-divides the crowded
ones until every team holds at most one sick person, then pins down the sick
member of each team with random codewords decoded by maximum likelihood.
"""

from .channels import (AwgnChannel, BscChannel, TabulatedChannel, capacity,
                       log_likelihood, parse_channel_spec, sample,
                       separation_exponent, z_channel)
from .harness import AggregateReport, ExperimentConfig, run_experiment, sweep
from .identification import BlockLengthPolicy, block_length, build_codebook
from .isolation import (IsolationConfig, classify_team, required_tests_per_team,
                        run_isolation, team_schedule)
from .population import (GroundTruth, Team, TeamLabel, TeamPartition, TestRow,
                         draw_ground_truth, noiseless_outcome, random_partition)
from .scheme import (SchemeConfig, SchemeResult, count_mistakes, decode_only,
                     run_scheme)
from .transcript import Transcript

__all__ = [
    "AwgnChannel", "BscChannel", "TabulatedChannel", "capacity",
    "log_likelihood", "parse_channel_spec", "sample", "separation_exponent",
    "z_channel", "AggregateReport", "ExperimentConfig", "run_experiment",
    "sweep", "BlockLengthPolicy", "block_length", "build_codebook",
    "IsolationConfig", "classify_team", "required_tests_per_team",
    "run_isolation", "team_schedule", "GroundTruth", "Team", "TeamLabel",
    "TeamPartition", "TestRow", "draw_ground_truth", "noiseless_outcome",
    "random_partition", "SchemeConfig", "SchemeResult", "count_mistakes",
    "decode_only", "run_scheme", "Transcript",
]

__version__ = "0.1.0"
