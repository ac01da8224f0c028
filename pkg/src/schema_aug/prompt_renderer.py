"""Prompt construction: instruction, schema block, dialogue, state request."""

from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Optional, Sequence, Tuple

from .corpus import DialogueSample
from .schema_model import Schema
from .state_codec import serialize_state

# Placeholder wording; override it to match the instruction of your own setup.
DEFAULT_INSTRUCTION = (
    "Track the state of the slots in the input dialogue based on the schema below. "
    "Output the dialogue state as a JSON object mapping slot names to values, "
    "including only the slots that have been mentioned."
)


@dataclass(frozen=True)
class PromptTemplate:
    instruction: str = DEFAULT_INSTRUCTION
    include_schema: bool = True
    schema_header: str = "### Schema:"
    dialogue_header: str = "### Dialogue:"
    state_request: str = "### Dialogue state:"
    user_prefix: str = "USER"
    system_prefix: str = "SYSTEM"

    @classmethod
    def from_file(cls, path, **overrides) -> "PromptTemplate":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown template field(s): {', '.join(sorted(unknown))}")
        return replace(cls(**data), **overrides)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class RenderedPrompt:
    sample_id: str
    text: str
    target: Optional[str] = None

    def to_dict(self) -> dict:
        rec = {"sample_id": self.sample_id, "prompt": self.text}
        if self.target is not None:
            rec["target"] = self.target
        return rec


def _quote(value: str) -> str:
    # Python-style single quoting, as in "['expensive', 'cheap']"
    return repr(value)


def render_schema_block(schema: Schema, header: str = "### Schema:") -> str:
    lines = [header]
    for s in schema:
        values = ", ".join(_quote(v) for v in s.possible_values)
        lines.append(f"- Slot: {s.full_name}; Description: {s.description}; Possible values: [{values}]")
    return "\n".join(lines)


_NEWLINE = re.compile(r"\r\n|[\r\n]")


def _one_line(text: str) -> str:
    return _NEWLINE.sub(" ", text)


def render_dialogue(history: Sequence[Tuple[str, str]], user_prefix="USER", system_prefix="SYSTEM") -> str:
    prefix = {"user": user_prefix, "system": system_prefix}
    return "\n".join(f"{prefix[spk]}: {_one_line(utt)}" for spk, utt in history)


def render_prompt(template: PromptTemplate, schema: Schema, sample: DialogueSample, mode: str = "infer") -> RenderedPrompt:
    if mode not in ("train", "infer"):
        raise ValueError(f"mode must be 'train' or 'infer', got {mode!r}")
    parts = [template.instruction]
    if template.include_schema:
        parts.append(render_schema_block(schema, template.schema_header))
    parts.append(
        template.dialogue_header + "\n"
        + render_dialogue(sample.history, template.user_prefix, template.system_prefix)
    )
    parts.append(template.state_request)
    target = serialize_state(sample.state) if mode == "train" else None
    return RenderedPrompt(sample.sample_id, "\n\n".join(parts), target)
