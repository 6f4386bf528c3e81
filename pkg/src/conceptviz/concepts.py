"""Data concepts: named fields an author intends to visualize.

A concept generalizes a table column: original concepts mirror the columns
of an uploaded table, custom concepts are declared by name plus example
values and start unbound ("unknown"), and derived concepts are computed
from other concepts by a formula.  A concept is "known" once it is bound to
a concrete column of a session table; custom concepts become known when a
reshaping program materializes their column, and a derived concept is known
exactly when all of its sources are.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from .formula import Formula, parse_formula
from .table import Table
from .values import SemanticType, Value, infer_type, render_text

MAX_EXAMPLE_VALUES = 5

ORIGINAL = "original"
DERIVED = "derived"
CUSTOM = "custom"


class ConceptError(Exception):
    pass


class DuplicateName(ConceptError):
    pass


class EmptyExamples(ConceptError):
    pass


class UnknownConcept(ConceptError):
    pass


class BindingIncomplete(ConceptError):
    pass


class ConceptInUse(ConceptError):
    pass


class SourceMismatch(ConceptError):
    pass


@dataclass(frozen=True)
class ColumnRef:
    table_id: str
    column: str


@dataclass
class DataConcept:
    id: str
    name: str
    kind: str  # original | derived | custom
    semantic_type: SemanticType
    example_values: tuple = ()
    resolution: Optional[ColumnRef] = None  # None = unknown
    # derived-only bookkeeping
    sources: tuple = ()
    description: str = ""
    formula_text: str = ""

    @property
    def known(self) -> bool:
        return self.resolution is not None

    @property
    def formula(self) -> Optional[Formula]:
        if not self.formula_text:
            return None
        return parse_formula(self.formula_text)

    def prefill_values(self) -> tuple:
        return self.example_values[:2]


def _sample_examples(values: Sequence[Value]) -> tuple:
    out: list = []
    seen = set()
    for v in values:
        if v is None:
            continue
        key = (type(v).__name__, render_text(v))
        if key in seen:
            continue
        seen.add(key)
        out.append(v)
        if len(out) == MAX_EXAMPLE_VALUES:
            break
    return tuple(out)


class ConceptShelf:
    """Ordered collection of a session's concepts, keyed by id."""

    def __init__(self):
        self._concepts: dict[str, DataConcept] = {}
        self._counter = 0

    def _new_id(self) -> str:
        self._counter += 1
        return f"c{self._counter}"

    def __iter__(self):
        return iter(self._concepts.values())

    def __len__(self):
        return len(self._concepts)

    def get(self, concept_id: str) -> DataConcept:
        try:
            return self._concepts[concept_id]
        except KeyError:
            raise UnknownConcept(f"no concept with id {concept_id!r}")

    def by_name(self, name: str) -> Optional[DataConcept]:
        for c in self._concepts.values():
            if c.name == name:
                return c
        return None

    def _check_name(self, name: str):
        if self.by_name(name) is not None:
            raise DuplicateName(f"concept name {name!r} already on the shelf")

    def load_original_concepts(self, t: Table,
                               table_id: str) -> list[DataConcept]:
        out = []
        for col in t.columns:
            self._check_name(col.name)
            c = DataConcept(
                id=self._new_id(), name=col.name, kind=ORIGINAL,
                semantic_type=col.sem_type,
                example_values=_sample_examples(t.column_values(col.name)),
                resolution=ColumnRef(table_id, col.name))
            self._concepts[c.id] = c
            out.append(c)
        return out

    def create_custom(self, name: str,
                      examples: Sequence[Value]) -> DataConcept:
        self._check_name(name)
        examples = [v for v in examples if v is not None]
        if not examples:
            raise EmptyExamples("a custom concept needs at least one example")
        c = DataConcept(
            id=self._new_id(), name=name, kind=CUSTOM,
            semantic_type=infer_type([render_text(v) for v in examples]),
            example_values=tuple(examples[:MAX_EXAMPLE_VALUES]))
        self._concepts[c.id] = c
        return c

    def create_derived(self, name: str, source_ids: Sequence[str],
                       description: str, formula: Formula,
                       formula_text: str) -> DataConcept:
        self._check_name(name)
        sources = [self.get(s) for s in source_ids]
        if len(formula.params) != len(sources):
            raise SourceMismatch(
                f"formula takes {len(formula.params)} parameter(s), "
                f"got {len(sources)} source concept(s)")
        c = DataConcept(
            id=self._new_id(), name=name, kind=DERIVED,
            semantic_type=SemanticType.TEXT,  # refined once materialized
            sources=tuple(source_ids), description=description,
            formula_text=formula_text)
        self._concepts[c.id] = c
        return c

    def resolve(self, binding: dict, table: Table, table_id: str):
        """Bind unknown concepts to columns and propagate to dependents.

        ``binding`` maps concept id -> column name in ``table``.  Resolution
        is monotone: already-known concepts are left alone.
        """
        for concept_id, column in binding.items():
            c = self.get(concept_id)
            if c.known:
                continue
            if column not in table.column_names:
                raise BindingIncomplete(
                    f"column {column!r} not in table {table_id!r}")
            c.resolution = ColumnRef(table_id, column)
            # re-infer the type from the concrete column
            c.semantic_type = table.columns[table.column_index(column)].sem_type
        self._propagate(table, table_id)

    def rebind_known(self, table: Table, table_id: str):
        """Point every known concept whose column exists in ``table`` at it."""
        for c in self._concepts.values():
            if c.known and c.resolution.column in table.column_names:
                c.resolution = ColumnRef(table_id, c.resolution.column)

    def _propagate(self, table: Table, table_id: str):
        changed = True
        while changed:
            changed = False
            for c in self._concepts.values():
                if c.kind != DERIVED or c.known:
                    continue
                if all(self.get(s).known for s in c.sources):
                    c.resolution = ColumnRef(table_id, c.name)
                    changed = True

    def delete(self, concept_id: str, extra_referents: Sequence[str] = ()):
        c = self.get(concept_id)
        for other in self._concepts.values():
            if concept_id in other.sources:
                raise ConceptInUse(
                    f"{c.name!r} is a source of derived concept "
                    f"{other.name!r}")
        if concept_id in extra_referents:
            raise ConceptInUse(f"{c.name!r} is referenced by a saved chart")
        del self._concepts[concept_id]

    # -- serialization ------------------------------------------------------

    def to_dicts(self) -> list[dict]:
        from .table import _value_to_json  # shared scalar JSON encoding
        out = []
        for c in self._concepts.values():
            out.append({
                "id": c.id,
                "name": c.name,
                "kind": c.kind,
                "semantic_type": c.semantic_type.value,
                "example_values": [_value_to_json(v)
                                   for v in c.example_values],
                "resolution": (
                    {"table_id": c.resolution.table_id,
                     "column": c.resolution.column}
                    if c.resolution else None),
                "sources": list(c.sources),
                "description": c.description,
                "formula_text": c.formula_text,
            })
        return out

    @classmethod
    def from_dicts(cls, dicts: Sequence[dict]) -> "ConceptShelf":
        from .values import parse_scalar

        shelf = cls()
        for d in dicts:
            sem = SemanticType(d["semantic_type"])
            examples = tuple(
                v if not isinstance(v, str) else parse_scalar(v, sem) or v
                for v in d["example_values"])
            res = d.get("resolution")
            c = DataConcept(
                id=d["id"], name=d["name"], kind=d["kind"],
                semantic_type=sem, example_values=examples,
                resolution=(ColumnRef(res["table_id"], res["column"])
                            if res else None),
                sources=tuple(d.get("sources", ())),
                description=d.get("description", ""),
                formula_text=d.get("formula_text", ""))
            shelf._concepts[c.id] = c
            number = int(c.id[1:]) if c.id[1:].isdigit() else 0
            shelf._counter = max(shelf._counter, number)
        return shelf
