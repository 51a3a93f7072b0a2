"""Attribute roles and dataset schemas.

A schema assigns exactly one role to every column of a microdata table:

* ``identifier`` -- directly identifying, excluded from distances and masking;
* ``quasi_identifier`` -- externally linkable, the columns that get masked;
* ``confidential`` -- the sensitive payload, never modified.

Schemas are immutable and round-trip through a small JSON document of the
form ``{"attributes": [{"name": ..., "role": ...}, ...]}``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .errors import DataError


class AttributeRole(str, Enum):
    IDENTIFIER = "identifier"
    QUASI_IDENTIFIER = "quasi_identifier"
    CONFIDENTIAL = "confidential"


@dataclass(frozen=True)
class Attribute:
    name: str
    role: AttributeRole

    def __post_init__(self):
        if not isinstance(self.name, str) or not self.name:
            raise DataError("attribute name must be a non-empty string")
        if not isinstance(self.role, AttributeRole):
            object.__setattr__(self, "role", AttributeRole(self.role))


@dataclass(frozen=True)
class AttributeSchema:
    """Ordered attribute list with per-column roles.

    Requires unique names, at least one quasi-identifier and at least one
    confidential attribute; identifier columns are optional.
    """

    attributes: tuple[Attribute, ...]

    def __post_init__(self):
        attrs = tuple(self.attributes)
        object.__setattr__(self, "attributes", attrs)
        if not attrs:
            raise DataError("schema must declare at least one attribute")
        names = [a.name for a in attrs]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise DataError(f"duplicate attribute names in schema: {dupes}")
        if not self.indices_for(AttributeRole.QUASI_IDENTIFIER):
            raise DataError("schema must declare at least one quasi_identifier attribute")
        if not self.indices_for(AttributeRole.CONFIDENTIAL):
            raise DataError("schema must declare at least one confidential attribute")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.attributes)

    @property
    def n_attributes(self) -> int:
        return len(self.attributes)

    def indices_for(self, role: AttributeRole) -> tuple[int, ...]:
        """Column indices carrying ``role``, in schema order."""
        role = AttributeRole(role)
        return tuple(i for i, a in enumerate(self.attributes) if a.role is role)

    def names_for(self, role: AttributeRole) -> tuple[str, ...]:
        return tuple(self.attributes[i].name for i in self.indices_for(role))

    def without_identifiers(self) -> "AttributeSchema":
        """Schema with identifier columns removed (masked-output shape)."""
        kept = tuple(a for a in self.attributes if a.role is not AttributeRole.IDENTIFIER)
        return AttributeSchema(kept)

    def to_dict(self) -> dict:
        return {"attributes": [{"name": a.name, "role": a.role.value} for a in self.attributes]}

    @classmethod
    def from_dict(cls, doc: dict) -> "AttributeSchema":
        if not isinstance(doc, dict) or "attributes" not in doc:
            raise DataError('schema document must be an object with an "attributes" list')
        entries = doc["attributes"]
        if not isinstance(entries, list):
            raise DataError('"attributes" must be a list')
        attrs = []
        for i, entry in enumerate(entries):
            if not isinstance(entry, dict) or "name" not in entry or "role" not in entry:
                raise DataError(f'attribute entry {i} must have "name" and "role"')
            try:
                role = AttributeRole(entry["role"])
            except ValueError:
                valid = ", ".join(r.value for r in AttributeRole)
                raise DataError(
                    f'attribute "{entry["name"]}" has unknown role "{entry["role"]}" '
                    f"(valid roles: {valid})"
                ) from None
            attrs.append(Attribute(str(entry["name"]), role))
        return cls(tuple(attrs))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "AttributeSchema":
        path = Path(path)
        if not path.exists():
            raise DataError(f"schema file not found: {path}")
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise DataError(f"schema file {path} is not valid JSON: {exc}") from None
        return cls.from_dict(doc)
