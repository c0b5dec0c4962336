"""Decoder-visible transcript of test designs and noisy outcomes.

The transcript is the only data the decoder may read.  It never stores the
ground truth or the noiseless outcome vector.  A live source executes tests
against the hidden truth and appends to the transcript; a replay source
feeds recorded observations back to the same decoding logic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .channels import Channel
from .population import GroundTruth, TeamLabel, noiseless_outcomes


class TranscriptError(ValueError):
    """Malformed or truncated transcript."""


class TranscriptExhausted(TranscriptError):
    """Replay ran out of recorded observations (tampered or foreign transcript)."""


@dataclass
class TranscriptRound:
    """One adaptive round: test rows (sparse, by block) and noisy observations."""

    kind: str
    blocks: list[tuple[np.ndarray, np.ndarray]] = field(default_factory=list)
    observation_parts: list[np.ndarray] = field(default_factory=list)
    # rows are kept explicitly only for transcripts loaded from disk
    loaded_rows: list[list[int]] | None = None

    @property
    def row_count(self) -> int:
        if self.loaded_rows is not None:
            return len(self.loaded_rows)
        return sum(inclusion.shape[0] for _, inclusion in self.blocks)

    def observations(self) -> np.ndarray:
        if not self.observation_parts:
            return np.empty(0)
        return np.concatenate(self.observation_parts)

    def iter_rows(self):
        if self.loaded_rows is not None:
            yield from self.loaded_rows
            return
        for members, inclusion in self.blocks:
            for i in range(inclusion.shape[0]):
                yield members[inclusion[i]].tolist()


@dataclass
class Transcript:
    header: dict
    rounds: list[TranscriptRound] = field(default_factory=list)

    @property
    def total_rows(self) -> int:
        return sum(r.row_count for r in self.rounds)

    def begin_round(self, kind: str) -> TranscriptRound:
        rnd = TranscriptRound(kind=kind)
        self.rounds.append(rnd)
        return rnd

    # -- serialization: line-delimited JSON ------------------------------

    def dump_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(json.dumps({"type": "header", **self.header}) + "\n")
            for rnd in self.rounds:
                obs = rnd.observations().tolist()
                record = {
                    "type": "round",
                    "kind": rnd.kind,
                    "rows": list(rnd.iter_rows()),
                    "observations": obs,
                }
                fh.write(json.dumps(record) + "\n")

    @classmethod
    def load_jsonl(cls, path) -> "Transcript":
        rounds: list[TranscriptRound] = []
        header = None
        with open(path) as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise TranscriptError(f"line {line_no}: invalid JSON") from exc
                kind = record.get("type")
                if kind == "header":
                    if header is not None:
                        raise TranscriptError("duplicate header record")
                    header = {k: v for k, v in record.items() if k != "type"}
                elif kind == "round":
                    if header is None:
                        raise TranscriptError("round record before header")
                    rows = record["rows"]
                    obs = np.asarray(record["observations"])
                    if len(rows) != obs.size:
                        raise TranscriptError(
                            f"line {line_no}: rows/observations length mismatch")
                    rnd = TranscriptRound(kind=record["kind"], loaded_rows=rows)
                    rnd.observation_parts.append(obs)
                    rounds.append(rnd)
                else:
                    raise TranscriptError(f"line {line_no}: unknown record type {kind!r}")
        if header is None:
            raise TranscriptError("transcript has no header record")
        return cls(header=header, rounds=rounds)


class LiveSource:
    """Executes tests against the hidden truth and logs the noisy outcomes.

    Lives strictly on the simulator side: the decoding logic only ever sees
    the observation arrays this source returns.
    """

    def __init__(self, truth: GroundTruth, channel: Channel,
                 noise_rng: np.random.Generator,
                 transcript: Transcript | None = None):
        self.truth = truth
        self.channel = channel
        self.noise_rng = noise_rng
        self.transcript = transcript
        self.sick_exit_round: dict[int, int] = {}
        self._current: TranscriptRound | None = None

    def begin_round(self, kind: str) -> None:
        if self.transcript is not None:
            self._current = self.transcript.begin_round(kind)

    def end_round(self) -> None:
        self._current = None

    def respond(self, members: np.ndarray, inclusion: np.ndarray) -> np.ndarray:
        y = noiseless_outcomes(inclusion, members, self.truth)
        z = self.channel.sample_bits(y, self.noise_rng)
        if self._current is not None:
            self._current.blocks.append((members, inclusion))
            self._current.observation_parts.append(z)
        return z

    # -- simulator-side diagnostics --------------------------------------

    def true_sick_count(self, members: np.ndarray) -> int:
        return int(np.isin(self.truth.sick_array, members).sum())

    def note_labels(self, round_index: int, teams, labels) -> None:
        """Track the round at which each sick person leaves twoplus status."""
        for team, label in zip(teams, labels):
            if label is TeamLabel.TWOPLUS:
                continue
            for j in self.truth.sick_array[np.isin(self.truth.sick_array, team.members)]:
                self.sick_exit_round.setdefault(int(j), round_index + 1)


class ReplaySource:
    """Feeds recorded observations back to the decoder, round by round."""

    def __init__(self, transcript: Transcript):
        self._rounds = list(transcript.rounds)
        self._next = 0
        self._obs: np.ndarray | None = None
        self._offset = 0

    def begin_round(self, kind: str) -> None:
        if self._next >= len(self._rounds):
            raise TranscriptExhausted("no recorded round left to replay")
        rnd = self._rounds[self._next]
        self._next += 1
        self._obs = rnd.observations()
        self._offset = 0

    def end_round(self) -> None:
        self._obs = None

    def respond(self, members: np.ndarray, inclusion: np.ndarray) -> np.ndarray:
        count = inclusion.shape[0]
        if self._obs is None or self._offset + count > self._obs.size:
            raise TranscriptExhausted("recorded observations ran out mid-round")
        out = self._obs[self._offset:self._offset + count]
        self._offset += count
        return out

    def true_sick_count(self, members: np.ndarray) -> int:
        raise TranscriptError("oracle classification is unavailable during replay")

    def note_labels(self, round_index: int, teams, labels) -> None:
        pass
