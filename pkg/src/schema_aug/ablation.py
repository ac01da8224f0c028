"""Test-time shuffling of slot descriptions and possible values."""

from __future__ import annotations

import random
import warnings
from typing import List, Tuple

from .schema_model import Schema, SlotDef

SCOPES = ("joint", "independent")


def shuffle_permutations(n: int, seed: int, scope: str = "joint") -> Tuple[List[int], List[int]]:
    """Return ``(description_perm, values_perm)``; slot i takes payload from slot perm[i].

    Under ``joint`` scope both permutations are the same list.
    """
    if scope not in SCOPES:
        raise ValueError(f"scope must be one of {SCOPES}, got {scope!r}")
    rng = random.Random(seed)
    desc = list(range(n))
    rng.shuffle(desc)
    if scope == "joint":
        return desc, desc
    values = list(range(n))
    rng.shuffle(values)
    return desc, values


def shuffle_schema(schema: Schema, seed: int, scope: str = "joint") -> Schema:
    """Permute descriptions/value lists across the whole schema; names stay put."""
    if len(schema) < 2:
        warnings.warn("shuffling a schema with fewer than 2 slots is a no-op", stacklevel=2)
        return schema
    desc, vals = shuffle_permutations(len(schema), seed, scope)
    slots = schema.slots
    return Schema(
        SlotDef(s.domain, s.base_name, slots[desc[i]].description, slots[vals[i]].possible_values)
        for i, s in enumerate(slots)
    )


def derangement_fraction(original: Schema, shuffled: Schema) -> float:
    if original.slot_names != shuffled.slot_names:
        raise ValueError("schemas must have the same slot names in the same order")
    if not len(original):
        return 0.0
    moved = sum(a.description != b.description for a, b in zip(original, shuffled))
    return moved / len(original)
