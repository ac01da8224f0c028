"""Typed DST schema: domains, slots, descriptions and possible values."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Union

BUNDLED_SCHEMAS = {
    "multiwoz": "multiwoz22_schema.json",
    "spokenwoz": "spokenwoz_schema.json",
}


class SchemaError(ValueError):
    pass


@dataclass(frozen=True)
class SlotDef:
    domain: str
    base_name: str
    description: str = ""
    possible_values: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.domain or not self.base_name:
            raise SchemaError(
                f"slot needs a non-empty domain and base name, got {self.domain!r}/{self.base_name!r}"
            )
        object.__setattr__(self, "possible_values", tuple(self.possible_values))
        if len(set(self.possible_values)) != len(self.possible_values):
            raise SchemaError(f"duplicate possible values for slot {self.full_name}")

    @property
    def full_name(self) -> str:
        return f"{self.domain}-{self.base_name}"


@dataclass(frozen=True)
class Schema:
    slots: tuple[SlotDef, ...] = ()
    domains: tuple[str, ...] = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "slots", tuple(self.slots))
        seen = set()
        for slot in self.slots:
            if slot.full_name in seen:
                raise SchemaError(f"duplicate slot identifier {slot.full_name!r}")
            seen.add(slot.full_name)
        # dict keeps first-seen order
        object.__setattr__(self, "domains", tuple(dict.fromkeys(s.domain for s in self.slots)))

    def __len__(self):
        return len(self.slots)

    def __iter__(self):
        return iter(self.slots)

    @property
    def slot_names(self) -> tuple[str, ...]:
        return tuple(s.full_name for s in self.slots)

    def slots_of(self, domain: str) -> tuple[SlotDef, ...]:
        return tuple(s for s in self.slots if s.domain == domain)

    def __contains__(self, full_name: str) -> bool:
        return full_name in self._index

    @property
    def _index(self) -> frozenset:
        # cached lazily; frozen dataclass so bypass __setattr__
        try:
            return self.__dict__["_index_cache"]
        except KeyError:
            idx = frozenset(self.slot_names)
            object.__setattr__(self, "_index_cache", idx)
            return idx

    def to_dict(self) -> dict:
        """Flat internal shape, the inverse of :func:`schema_from_dict`."""
        return {
            "slots": [
                {
                    "domain": s.domain,
                    "name": s.base_name,
                    "description": s.description,
                    "possible_values": list(s.possible_values),
                }
                for s in self.slots
            ]
        }


def split_slot_name(full_name: str) -> tuple[str, str]:
    """Split ``"hotel-pricerange"`` into ``("hotel", "pricerange")``.

    Only the first hyphen separates the domain; base names may contain more.
    """
    domain, sep, base = full_name.partition("-")
    if not sep or not domain or not base:
        raise SchemaError(f"malformed slot identifier {full_name!r}")
    return domain, base


def _slot_from_multiwoz(service_name: str, raw: dict) -> SlotDef:
    name = raw["name"]
    domain, base = split_slot_name(name) if "-" in name else (service_name, name)
    if domain != service_name:
        raise SchemaError(f"slot {name!r} listed under service {service_name!r}")
    return SlotDef(domain, base, raw.get("description", ""), tuple(raw.get("possible_values") or ()))


def schema_from_dict(data: Union[dict, list]) -> Schema:
    """Build a Schema from either accepted file shape.

    A list is read as MultiWOZ 2.2 ``schema.json`` (services with slots);
    a dict with a ``"slots"`` list is the flat internal shape.
    """
    if isinstance(data, list):
        slots = []
        for service in data:
            service_name = service["service_name"]
            slots.extend(_slot_from_multiwoz(service_name, s) for s in service.get("slots", []))
        return Schema(slots)
    if isinstance(data, dict) and isinstance(data.get("slots"), list):
        return Schema(
            SlotDef(s["domain"], s["name"], s.get("description", ""), tuple(s.get("possible_values") or ()))
            for s in data["slots"]
        )
    raise SchemaError("unrecognized schema layout: expected a service list or {'slots': [...]}")


def load_schema(path: Union[str, Path]) -> Schema:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path}: invalid JSON at line {e.lineno}: {e.msg}") from e
    except KeyError as e:
        raise SchemaError(f"{path}: missing field {e}") from e
    try:
        return schema_from_dict(data)
    except KeyError as e:
        raise SchemaError(f"{path}: missing field {e}") from e


def bundled_schema(name: str) -> Schema:
    """Load one of the shipped schemas (``multiwoz`` or ``spokenwoz``)."""
    try:
        fname = BUNDLED_SCHEMAS[name]
    except KeyError:
        raise SchemaError(f"no bundled schema named {name!r}; choose from {sorted(BUNDLED_SCHEMAS)}") from None
    text = resources.files("schema_aug.data").joinpath(fname).read_text(encoding="utf-8")
    return schema_from_dict(json.loads(text))


def resolve_schema(spec: Union[str, Path]) -> Schema:
    """Accept either a bundled schema name or a file path."""
    if str(spec) in BUNDLED_SCHEMAS:
        return bundled_schema(str(spec))
    return load_schema(spec)


def dump_schema(schema: Schema, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(schema.to_dict(), indent=2) + "\n", encoding="utf-8")


def restrict_to_domains(schema: Schema, domains: Iterable[str]) -> Schema:
    domains = set(domains)
    unknown = domains - set(schema.domains)
    if unknown:
        raise SchemaError(f"unknown domain(s): {', '.join(sorted(unknown))}")
    return Schema(s for s in schema.slots if s.domain in domains)
