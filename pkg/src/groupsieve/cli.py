"""Command line front end.

Subcommands:
  capacity        print C(Z) and D(Z) for a channel spec
  simulate        run one experiment from a JSON config
  sweep           expand one config axis and run each point
  classify-bench  classifier error vs the exact oracle and its design bound
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import channels, harness, isolation, oracles
from .channels import BscChannel, parse_channel_spec
from .population import TeamLabel
from .scheme import run_scheme


def _cmd_capacity(args) -> int:
    channel = parse_channel_spec(args.channel)
    out = {
        "capacity_bits": channels.capacity(channel),
        "separation_nats": channels.separation_exponent(channel,
                                                        args.inclusion_fraction),
    }
    print(json.dumps(out))
    return 0


def _cmd_simulate(args) -> int:
    config = harness.ExperimentConfig.load(args.config)
    if args.seed is not None:
        config.base_seed = args.seed
    report = harness.run_experiment(config)
    csv_path = args.csv or config.csv_path
    if csv_path:
        report.write_csv(csv_path)
    summary_path = args.summary or config.summary_path
    if summary_path:
        report.write_summary(summary_path)
    if args.transcript:
        result = run_scheme(config.n, config.k, parse_channel_spec(config.channel),
                            config.scheme_config(),
                            harness.trial_seed(config.base_seed, 0))
        result.transcript.dump_jsonl(args.transcript)
    print(json.dumps(report.summary, sort_keys=True))
    return 0


def _parse_sweep_values(axis: str, raw: str):
    if axis == "schedule":
        return [[int(m) for m in group.split(",")] for group in raw.split(";")]
    if axis in ("n", "k"):
        return [int(v) for v in raw.split(",")]
    return [float(v) for v in raw.split(",")]


def _cmd_sweep(args) -> int:
    config = harness.ExperimentConfig.load(args.config)
    values = _parse_sweep_values(args.axis, args.values)
    results = harness.sweep(config, args.axis, values)
    if args.csv:
        harness.write_sweep_csv(results, args.axis, args.csv)
    combined = {str(value): report.summary for value, report in results}
    print(json.dumps(combined, sort_keys=True))
    return 0


def _cmd_classify_bench(args) -> int:
    channel = parse_channel_spec(args.channel)
    f = args.inclusion_fraction
    rng = np.random.default_rng(args.seed)
    weights = channels.hypothesis_weights(f)
    report: dict = {"channel": args.channel, "s": args.s, "trials": args.trials}
    is_bsc = isinstance(channel, BscChannel)
    if is_bsc:
        table = isolation.bsc_labels_by_count(channel, args.s, f)
        means = oracles.bsc_hypothesis_means(channel.p, f)
    for label, (w0, w1) in zip((TeamLabel.EMPTY, TeamLabel.EXACT, TeamLabel.TWOPLUS),
                               weights):
        entry: dict = {}
        if is_bsc:
            mean = means[list(weights).index((w0, w1))]
            counts = rng.binomial(args.s, mean, size=args.trials)
            errors = sum(1 for c in counts if table[c] is not label)
            entry["exact_error"] = oracles.exact_classifier_error(channel, args.s,
                                                                  label, f)
            entry["hoeffding_bound"] = oracles.hoeffding_bound(channel.p, args.s)
        else:
            errors = 0
            for _ in range(args.trials):
                bits = (rng.random(args.s) < w1).astype(np.uint8)
                obs = channel.sample_bits(bits, rng)
                if isolation.classify_team(obs, channel, f) is not label:
                    errors += 1
        entry["empirical_error"] = errors / args.trials
        report[label.value] = entry
    print(json.dumps(report, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="groupsieve",
        description="Adaptive noisy group testing: isolate teams, then identify.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("capacity", help="print C(Z) and D(Z) for a channel")
    p.add_argument("--channel", required=True, help="e.g. bsc:0.05, awgn:0.8, z:0.1")
    p.add_argument("--inclusion-fraction", type=float, default=0.5)
    p.set_defaults(func=_cmd_capacity)

    p = sub.add_parser("simulate", help="run one experiment from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--csv", default=None, help="per-trial rows output path")
    p.add_argument("--summary", default=None, help="summary JSON output path")
    p.add_argument("--transcript", default=None,
                   help="dump trial 0's transcript (JSON lines)")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("sweep", help="run one experiment per axis value")
    p.add_argument("--config", required=True)
    p.add_argument("--axis", required=True, choices=harness.SWEEP_AXES)
    p.add_argument("--values", required=True,
                   help="comma-separated; schedules separated by ';'")
    p.add_argument("--csv", default=None)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("classify-bench",
                       help="team classifier error vs oracle and bound")
    p.add_argument("--channel", required=True)
    p.add_argument("--s", type=int, required=True, help="tests per team")
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--inclusion-fraction", type=float, default=0.5)
    p.set_defaults(func=_cmd_classify_bench)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
