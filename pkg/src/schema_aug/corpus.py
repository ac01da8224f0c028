"""Turn-level DST samples, corpus I/O and target-domain splitting."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, Iterator, Tuple, Union

from .schema_model import Schema, split_slot_name

# slot full identifier -> value
DialogueState = Dict[str, str]

SPEAKERS = ("user", "system")


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class DialogueSample:
    sample_id: str
    dialogue_id: str
    turn_index: int
    history: Tuple[Tuple[str, str], ...]
    state: DialogueState

    def __post_init__(self):
        object.__setattr__(self, "history", tuple((spk, utt) for spk, utt in self.history))
        if self.turn_index < 0:
            raise CorpusError(f"{self.sample_id}: negative turn_index")
        if not self.history:
            raise CorpusError(f"{self.sample_id}: empty history")
        for spk, _ in self.history:
            if spk not in SPEAKERS:
                raise CorpusError(f"{self.sample_id}: unknown speaker {spk!r}")
        if self.history[-1][0] != "user":
            raise CorpusError(f"{self.sample_id}: history must end with a user utterance")

    def to_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "dialogue_id": self.dialogue_id,
            "turn_index": self.turn_index,
            "history": [list(h) for h in self.history],
            "state": dict(self.state),
        }

    @classmethod
    def from_dict(cls, rec: dict) -> "DialogueSample":
        return cls(
            sample_id=str(rec["sample_id"]),
            dialogue_id=str(rec["dialogue_id"]),
            turn_index=int(rec["turn_index"]),
            history=tuple((str(s), str(u)) for s, u in rec["history"]),
            state={str(k): str(v) for k, v in rec["state"].items()},
        )


@dataclass(frozen=True)
class Corpus:
    samples: Tuple[DialogueSample, ...]
    schema: Schema

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        seen = set()
        for s in self.samples:
            if s.sample_id in seen:
                raise CorpusError(f"duplicate sample_id {s.sample_id!r}")
            seen.add(s.sample_id)
            for key in s.state:
                if key not in self.schema:
                    raise CorpusError(f"{s.sample_id}: slot {key!r} is not in the schema")

    def __len__(self):
        return len(self.samples)

    def __iter__(self) -> Iterator[DialogueSample]:
        return iter(self.samples)

    def by_id(self) -> Dict[str, DialogueSample]:
        return {s.sample_id: s for s in self.samples}


def iter_jsonl(path: Union[str, Path]) -> Iterator[Tuple[int, dict]]:
    """Yield ``(line_number, record)`` for each non-blank line."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise CorpusError(f"{path}:{lineno}: malformed record ({e.msg})") from e
            if not isinstance(rec, dict):
                raise CorpusError(f"{path}:{lineno}: record is not an object")
            yield lineno, rec


def load_corpus(path: Union[str, Path], schema: Schema) -> Corpus:
    samples = []
    seen = set()
    for lineno, rec in iter_jsonl(path):
        try:
            sample = DialogueSample.from_dict(rec)
        except (KeyError, TypeError, ValueError) as e:
            raise CorpusError(f"{path}:{lineno}: {e}") from e
        if sample.sample_id in seen:
            raise CorpusError(f"{path}:{lineno}: duplicate sample_id {sample.sample_id!r}")
        seen.add(sample.sample_id)
        for key in sample.state:
            if key not in schema:
                raise CorpusError(f"{path}:{lineno}: slot {key!r} is not in the schema")
        samples.append(sample)
    return Corpus(samples, schema)


def dump_corpus(corpus: Union[Corpus, Iterable[DialogueSample]], path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in corpus:
            fh.write(json.dumps(s.to_dict(), ensure_ascii=False) + "\n")


def state_domains(state: DialogueState) -> set:
    return {split_slot_name(k)[0] for k in state}


def _check_domains(schema: Schema, domains) -> set:
    domains = set(domains)
    unknown = domains - set(schema.domains)
    if unknown:
        raise CorpusError(f"unknown domain(s): {', '.join(sorted(unknown))}")
    return domains


def split_target(corpus: Corpus, target_domains) -> Tuple[Corpus, Corpus]:
    """Partition samples by whether their state touches any target domain."""
    targets = _check_domains(corpus.schema, target_domains)
    hit, miss = [], []
    for s in corpus:
        (hit if state_domains(s.state) & targets else miss).append(s)
    return Corpus(hit, corpus.schema), Corpus(miss, corpus.schema)


def filter_training(corpus: Corpus, target_domains) -> Corpus:
    """Drop every dialogue that has at least one turn touching a target domain.

    Exclusion is per dialogue, so target-domain context cannot leak through
    the shared history of other turns.
    """
    targets = _check_domains(corpus.schema, target_domains)
    tainted = {s.dialogue_id for s in corpus if state_domains(s.state) & targets}
    return Corpus([s for s in corpus if s.dialogue_id not in tainted], corpus.schema)
