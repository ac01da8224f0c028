"""Dialogue state <-> JSON text, and state extraction from raw generations.

A generation that yields no flat ``{"slot": "value"}`` object is a scored
miss, not an exception: :func:`extract_and_parse` never raises.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Optional

from .corpus import DialogueState

PARSED = "parsed"
NO_JSON_FOUND = "no_json_found"
MALFORMED_JSON = "malformed_json"
NON_FLAT_STRUCTURE = "non_flat_structure"
STATUSES = (PARSED, NO_JSON_FOUND, MALFORMED_JSON, NON_FLAT_STRUCTURE)

_OPEN_BRACE = re.compile(r"\{")
_WS = re.compile(r"\s+")
_decoder = json.JSONDecoder()


@dataclass(frozen=True)
class ParseOutcome:
    status: str
    state: Optional[DialogueState] = None

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"unknown parse status {self.status!r}")
        if (self.status == PARSED) != (self.state is not None):
            raise ValueError("state must be present exactly when status is 'parsed'")

    @property
    def ok(self) -> bool:
        return self.status == PARSED

    def to_dict(self) -> dict:
        return {"status": self.status, "state": self.state}

    @classmethod
    def from_dict(cls, data: dict) -> "ParseOutcome":
        state = data.get("state")
        return cls(data["status"], dict(state) if state is not None else None)


def serialize_state(state: DialogueState) -> str:
    return json.dumps({k: state[k] for k in sorted(state)}, ensure_ascii=False)


def _is_flat(obj) -> bool:
    return isinstance(obj, dict) and all(isinstance(v, str) for v in obj.values())


def extract_and_parse(generation: str) -> ParseOutcome:
    """Return the leftmost JSON object in ``generation`` that is a flat str->str map.

    Each ``{`` is tried as the start of a JSON value; a successfully decoded
    object consumes its span, so objects nested inside a rejected outer object
    are never picked up on their own.
    """
    if not isinstance(generation, str):
        return ParseOutcome(NO_JSON_FOUND)
    status = NO_JSON_FOUND
    pos = 0
    while True:
        m = _OPEN_BRACE.search(generation, pos)
        if m is None:
            break
        start = m.start()
        try:
            obj, end = _decoder.raw_decode(generation, start)
        except (json.JSONDecodeError, RecursionError):
            if status == NO_JSON_FOUND:
                status = MALFORMED_JSON
            pos = start + 1
            continue
        if _is_flat(obj):
            return ParseOutcome(PARSED, dict(obj))
        status = NON_FLAT_STRUCTURE
        pos = end
    return ParseOutcome(status)


def normalize_value(value: str) -> str:
    return _WS.sub(" ", value.strip()).lower()


def normalize_state(state: DialogueState) -> DialogueState:
    return {k: normalize_value(v) for k, v in state.items()}
