"""Schema Augmentation: synonym (SSA) and encoding (ESA) renames of schema names.

A :class:`RenameAssignment` rewrites domain names and slot base names; it is
applied identically to the schema shown in the prompt and to the target
state, so labels always use the vocabulary the prompt declares.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Dict, Iterator, Mapping, Optional, Tuple, Union

from .corpus import Corpus, DialogueSample, DialogueState
from .schema_model import Schema, SlotDef, split_slot_name

KINDS = ("ssa", "esa")
VARIANTS = ("single", "multi")
MAX_REDRAWS = 16

BUNDLED_MAPS = {"ssa": "ssa_map.json", "esa": "esa_map.json"}


class AugmentationError(ValueError):
    pass


@dataclass(frozen=True)
class ReplacementMap:
    slot_alternatives: Mapping[str, Tuple[str, ...]]
    domain_alternatives: Mapping[str, Tuple[str, ...]]
    kind: str = "ssa"

    def __post_init__(self):
        for section, table in (("slots", self.slot_alternatives), ("domains", self.domain_alternatives)):
            for key, alts in table.items():
                if not alts:
                    raise AugmentationError(f"empty alternative list for {section[:-1]} {key!r}")
                if any(not isinstance(a, str) or not a for a in alts):
                    raise AugmentationError(f"alternatives for {key!r} must be non-empty strings")
        for key, alts in self.domain_alternatives.items():
            # the first hyphen separates domain from slot
            if any("-" in a for a in alts):
                raise AugmentationError(f"domain alternative for {key!r} contains '-'")
        if self.kind == "esa":
            owner: Dict[str, str] = {}
            for section, table in (("slot", self.slot_alternatives), ("domain", self.domain_alternatives)):
                for key, alts in table.items():
                    for a in alts:
                        other = owner.setdefault(a, f"{section} {key!r}")
                        if other != f"{section} {key!r}":
                            raise AugmentationError(
                                f"ESA code {a!r} is shared by {other} and {section} {key!r}"
                            )


def replacement_map_from_dict(data: dict, kind: str) -> ReplacementMap:
    if kind not in KINDS:
        raise AugmentationError(f"unknown augmentation kind {kind!r}")
    for section in ("slots", "domains"):
        if not isinstance(data.get(section), dict):
            raise AugmentationError(f"replacement map is missing the {section!r} section")
    return ReplacementMap(
        {k: tuple(v) for k, v in data["slots"].items()},
        {k: tuple(v) for k, v in data["domains"].items()},
        kind,
    )


def load_replacement_map(path: Union[str, Path], kind: str) -> ReplacementMap:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise AugmentationError(f"{path}:{e.lineno}: invalid JSON ({e.msg})") from e
    return replacement_map_from_dict(data, kind)


def bundled_map(kind: str) -> ReplacementMap:
    text = resources.files("schema_aug.data").joinpath(BUNDLED_MAPS[kind]).read_text(encoding="utf-8")
    return replacement_map_from_dict(json.loads(text), kind)


@dataclass(frozen=True)
class AugmentationPlan:
    kind: str  # "ssa", "esa" or "none"
    variant: str = "single"
    seed: int = 42
    map: Optional[ReplacementMap] = None

    def __post_init__(self):
        if self.kind not in KINDS + ("none",):
            raise AugmentationError(f"unknown augmentation kind {self.kind!r}")
        if self.variant not in VARIANTS:
            raise AugmentationError(f"unknown variant {self.variant!r}")
        if self.kind != "none" and self.map is None:
            raise AugmentationError(f"{self.kind} plan needs a replacement map")


@dataclass(frozen=True)
class RenameAssignment:
    domain_renames: Mapping[str, str]
    slot_renames: Mapping[str, str]
    # original full identifier -> renamed full identifier, for the schema it was built on
    identifiers: Mapping[str, str] = field(default_factory=dict)

    def rename(self, full_name: str) -> str:
        domain, base = split_slot_name(full_name)
        try:
            return f"{self.domain_renames[domain]}-{self.slot_renames[base]}"
        except KeyError as e:
            raise AugmentationError(f"assignment does not cover {e.args[0]!r} (in {full_name!r})") from None

    def to_dict(self) -> dict:
        return {
            "domains": dict(self.domain_renames),
            "slots": dict(self.slot_renames),
            "identifiers": dict(self.identifiers),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RenameAssignment":
        return cls(dict(data["domains"]), dict(data["slots"]), dict(data.get("identifiers", {})))


def build_assignment(domain_renames, slot_renames, schema: Schema) -> RenameAssignment:
    """Materialize renames for ``schema``, rejecting coverage gaps and collisions."""
    partial = RenameAssignment(dict(domain_renames), dict(slot_renames))
    table = {}
    owner: Dict[str, str] = {}
    for slot in schema:
        new = partial.rename(slot.full_name)
        if new in owner:
            raise AugmentationError(
                f"rename collision: {owner[new]!r} and {slot.full_name!r} both become {new!r}"
            )
        owner[new] = slot.full_name
        table[slot.full_name] = new
    return RenameAssignment(partial.domain_renames, partial.slot_renames, table)


def identity_assignment(schema: Schema) -> RenameAssignment:
    return build_assignment(
        {d: d for d in schema.domains}, {s.base_name: s.base_name for s in schema}, schema
    )


def stable_index(seed: int, sample_id: str, key: str, n: int, nonce: int = 0) -> int:
    """Uniform index in ``range(n)`` that depends only on its arguments."""
    msg = f"{seed}\x1f{sample_id}\x1f{key}\x1f{nonce}".encode("utf-8")
    digest = hashlib.blake2b(msg, digest_size=8).digest()
    return int.from_bytes(digest, "big") % n


def _coverage(rmap: ReplacementMap, schema: Schema) -> None:
    missing = [f"domain {d!r}" for d in schema.domains if d not in rmap.domain_alternatives]
    bases = dict.fromkeys(s.base_name for s in schema)
    missing += [f"slot {b!r}" for b in bases if b not in rmap.slot_alternatives]
    if missing:
        raise AugmentationError(f"replacement map has no entry for {', '.join(missing)}")


def assign_renames(plan: AugmentationPlan, schema: Schema, sample_id: str) -> RenameAssignment:
    if plan.kind == "none":
        return identity_assignment(schema)
    rmap = plan.map
    _coverage(rmap, schema)
    bases = list(dict.fromkeys(s.base_name for s in schema))
    if plan.variant == "single":
        return build_assignment(
            {d: rmap.domain_alternatives[d][0] for d in schema.domains},
            {b: rmap.slot_alternatives[b][0] for b in bases},
            schema,
        )

    def pick(key: str, alts, nonce: int) -> str:
        return alts[stable_index(plan.seed, sample_id, key, len(alts), nonce)]

    last_error = None
    for nonce in range(MAX_REDRAWS):
        domains = {d: pick("domain:" + d, rmap.domain_alternatives[d], nonce) for d in schema.domains}
        slots = {b: pick("slot:" + b, rmap.slot_alternatives[b], nonce) for b in bases}
        try:
            return build_assignment(domains, slots, schema)
        except AugmentationError as e:
            last_error = e
    raise AugmentationError(f"{sample_id}: no collision-free draw in {MAX_REDRAWS} attempts ({last_error})")


def apply_to_schema(assignment: RenameAssignment, schema: Schema) -> Schema:
    """Rename domains and slot base names; descriptions and values stay verbatim."""
    slots = []
    for s in schema:
        for name, table in ((s.domain, assignment.domain_renames), (s.base_name, assignment.slot_renames)):
            if name not in table:
                raise AugmentationError(f"assignment does not cover {name!r}")
        slots.append(SlotDef(
            assignment.domain_renames[s.domain],
            assignment.slot_renames[s.base_name],
            s.description,
            s.possible_values,
        ))
    return Schema(slots)


def apply_to_state(assignment: RenameAssignment, state: DialogueState) -> DialogueState:
    out = {}
    for key, value in state.items():
        new = assignment.identifiers.get(key) or assignment.rename(key)
        out[new] = value
    if len(out) != len(state):
        raise AugmentationError("renaming merged two state keys")
    return out


def invert(assignment: RenameAssignment, state: DialogueState) -> DialogueState:
    """Map a state in renamed vocabulary back to the original identifiers."""
    if assignment.identifiers:
        inverse = {v: k for k, v in assignment.identifiers.items()}
    else:
        inverse = {}
        # without an identifier table, only an injective name mapping can be undone
        dinv = {v: k for k, v in assignment.domain_renames.items()}
        sinv = {v: k for k, v in assignment.slot_renames.items()}
        if len(dinv) != len(assignment.domain_renames) or len(sinv) != len(assignment.slot_renames):
            raise AugmentationError("assignment is not invertible without an identifier table")
        for key in state:
            d, b = split_slot_name(key)
            if d in dinv and b in sinv:
                inverse[key] = f"{dinv[d]}-{sinv[b]}"
    out = {}
    for key, value in state.items():
        if key not in inverse:
            raise AugmentationError(f"unknown renamed slot {key!r}")
        out[inverse[key]] = value
    return out


@dataclass(frozen=True)
class AugmentedRecord:
    sample_id: str
    schema: Schema
    sample: DialogueSample
    assignment: RenameAssignment

    def to_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "dialogue_id": self.sample.dialogue_id,
            "turn_index": self.sample.turn_index,
            "assignment": self.assignment.to_dict(),
            "schema": self.schema.to_dict(),
            "history": [list(h) for h in self.sample.history],
            "state": dict(self.sample.state),
        }


def augment_sample(plan: AugmentationPlan, schema: Schema, sample: DialogueSample) -> AugmentedRecord:
    assignment = assign_renames(plan, schema, sample.sample_id)
    new = DialogueSample(
        sample.sample_id,
        sample.dialogue_id,
        sample.turn_index,
        sample.history,
        apply_to_state(assignment, sample.state),
    )
    return AugmentedRecord(sample.sample_id, apply_to_schema(assignment, schema), new, assignment)


def augment_corpus(plan: AugmentationPlan, corpus: Corpus) -> Iterator[AugmentedRecord]:
    """Yield one augmented record per sample, in corpus order.

    Dialogue text is never touched; only the schema names and state keys.
    """
    static = None
    if plan.kind == "none" or plan.variant == "single":
        static = assign_renames(plan, corpus.schema, "")
        static_schema = apply_to_schema(static, corpus.schema)
    for sample in corpus:
        if static is None:
            yield augment_sample(plan, corpus.schema, sample)
            continue
        new = DialogueSample(
            sample.sample_id, sample.dialogue_id, sample.turn_index, sample.history,
            apply_to_state(static, sample.state),
        )
        yield AugmentedRecord(sample.sample_id, static_schema, new, static)
