"""Converters from native MultiWOZ 2.2 / SpokenWOZ files to canonical samples.

Both adapters emit one sample per user turn, with the cumulative state at
that turn and the full history up to and including the user utterance.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Iterator, List, Union

from .corpus import CorpusError, DialogueSample
from .schema_model import Schema

# values that mean "slot not filled" in the native annotations
_EMPTY_VALUES = {"", "none", "not mentioned"}


def _read_json(path: Path):
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise CorpusError(f"{path}:{e.lineno}: invalid JSON ({e.msg})") from e


def _expand(paths: Iterable[Union[str, Path]]) -> List[Path]:
    out = []
    for p in map(Path, paths):
        if p.is_dir():
            out.extend(sorted(q for q in p.glob("*.json") if q.name != "schema.json"))
        else:
            out.append(p)
    return out


def _check_slot(key: str, schema: Schema, where: str) -> None:
    if key not in schema:
        raise CorpusError(f"{where}: slot {key!r} is not in the schema")


def multiwoz22_samples(paths, schema: Schema) -> Iterator[DialogueSample]:
    """Flatten MultiWOZ 2.2 dialogue files (``dialogues_*.json``).

    MultiWOZ 2.2 user frames already carry the cumulative state; values are
    lists of alternatives and the first one is taken.
    """
    for path in _expand(paths):
        dialogues = _read_json(path)
        if not isinstance(dialogues, list):
            raise CorpusError(f"{path}: expected a list of dialogues")
        for dlg in dialogues:
            did = dlg["dialogue_id"]
            history = []
            for turn in dlg["turns"]:
                speaker = turn["speaker"].lower()
                history.append((speaker, turn["utterance"]))
                if speaker != "user":
                    continue
                state = {}
                for frame in turn.get("frames", []):
                    for key, vals in frame.get("state", {}).get("slot_values", {}).items():
                        value = vals[0] if isinstance(vals, list) else vals
                        if str(value).strip().lower() in _EMPTY_VALUES:
                            continue
                        _check_slot(key, schema, f"{path}:{did}")
                        state[key] = str(value)
                idx = sum(1 for spk, _ in history if spk == "user") - 1
                yield DialogueSample(f"{did}:{idx}", did, idx, tuple(history), state)


def _metadata_state(metadata: dict, schema: Schema, where: str) -> dict:
    state = {}
    for domain, parts in (metadata or {}).items():
        for section in ("semi", "book"):
            for key, value in (parts.get(section) or {}).items():
                if key == "booked" or isinstance(value, (list, dict)):
                    continue
                if str(value).strip().lower() in _EMPTY_VALUES:
                    continue
                full = f"{domain.lower()}-{key.lower().replace(' ', '')}"
                _check_slot(full, schema, where)
                state[full] = str(value)
    return state


def spokenwoz_samples(paths, schema: Schema) -> Iterator[DialogueSample]:
    """Flatten SpokenWOZ ``data.json`` style files (dialogue id -> log).

    The belief state for a user turn is read from the metadata of the
    following system turn (MultiWOZ 2.1 convention), falling back to the
    user turn's own metadata and finally to the previous state.
    """
    for path in _expand(paths):
        data = _read_json(path)
        if not isinstance(data, dict):
            raise CorpusError(f"{path}: expected an object keyed by dialogue id")
        for did, dlg in data.items():
            log = dlg["log"]
            history = []
            state: dict = {}
            user_idx = 0
            for i, turn in enumerate(log):
                speaker = (turn.get("tag") or ("user" if i % 2 == 0 else "system")).lower()
                history.append((speaker, turn["text"]))
                if speaker != "user":
                    continue
                where = f"{path}:{did}:{i}"
                nxt = log[i + 1] if i + 1 < len(log) else None
                if nxt is not None and nxt.get("metadata"):
                    state = _metadata_state(nxt["metadata"], schema, where)
                elif turn.get("metadata"):
                    state = _metadata_state(turn["metadata"], schema, where)
                yield DialogueSample(f"{did}:{user_idx}", did, user_idx, tuple(history), dict(state))
                user_idx += 1


ADAPTERS = {
    "multiwoz": multiwoz22_samples,
    "spokenwoz": spokenwoz_samples,
}
