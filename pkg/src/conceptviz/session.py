"""Session orchestration: the formulate/confirm loop.

A session holds the uploaded tables, the concept shelf, saved charts, and
an audit log.  ``formulate`` either answers immediately (all encoded
concepts known) or asks for an example relation; ``complete_formulate``
runs reshaping synthesis and builds chart candidates; ``save_chart``
commits a candidate, making its table current and resolving the unknown
concepts bound in it.  The pipeline order is always reshape-then-derive.

Every mutation appends a replayable event to the audit log: replaying the
log into a fresh session reproduces the exact end state.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional, Sequence

from . import codegen
from .charts import (
    ChartTemplate,
    Encoding,
    assemble_spec,
    get_template,
    register_custom_template,
)
from .concepts import ColumnRef, ConceptShelf, DataConcept
from .evaluate import DerivationError, apply_derivation
from .formula import FormulaError, parse_formula
from .reshape import ReshapeError, eval_program
from .synthesis import ExampleRelation, SynthesisLimits, synthesize
from .table import Table, _json_to_value, _value_to_json, build_table
from .values import SemanticType


class SessionError(Exception):
    pass


class StaleCandidate(SessionError):
    pass


class NoUnknownExamples(SessionError):
    pass


class ExampleMismatch(SessionError):
    pass


@dataclass(frozen=True)
class EncodingRequest:
    channel: str
    concept_id: Optional[str] = None  # None only for aggregate=count
    aggregate: Optional[str] = None

    def to_dict(self) -> dict:
        return {"channel": self.channel, "concept_id": self.concept_id,
                "aggregate": self.aggregate}

    @classmethod
    def from_dict(cls, d: dict) -> "EncodingRequest":
        return cls(d["channel"], d.get("concept_id"), d.get("aggregate"))


@dataclass(frozen=True)
class PendingFormulate:
    template_id: str
    encodings: tuple
    columns: tuple  # encoded concept names, the example-relation header
    session_version: int


@dataclass(frozen=True)
class NeedsExampleRelation:
    columns: tuple
    prefilled_rows: tuple  # two partial rows; None marks a blank cell
    pending: PendingFormulate


@dataclass(frozen=True)
class Provenance:
    reshape_program: str  # program text or "none"
    formulas: tuple  # (concept name, formula text) pairs
    column_binding: tuple  # (concept name, source column) pairs


@dataclass(frozen=True)
class ChartCandidate:
    table: Table
    spec: dict
    provenance: Provenance
    session_version: int
    resolved_binding: tuple  # (concept id, column name) for unknowns
    index: int


@dataclass(frozen=True)
class Ready:
    candidates: tuple


class Session:
    def __init__(self, session_id: str):
        self.id = session_id
        self.tables: dict[str, Table] = {}
        self.current_table_id: Optional[str] = None
        self.shelf = ConceptShelf()
        self.saved_charts: list[dict] = []
        self.audit_log: list[dict] = []
        self.custom_templates: dict[str, ChartTemplate] = {}
        self.version = 0
        self._table_counter = 0

    # -- plumbing -----------------------------------------------------------

    @property
    def current_table(self) -> Table:
        return self.tables[self.current_table_id]

    def _new_table_id(self) -> str:
        self._table_counter += 1
        return f"t{self._table_counter}"

    def _log(self, event_type: str, **payload):
        self.audit_log.append({"type": event_type, **payload})

    def _bump(self):
        self.version += 1

    def _template(self, template_id: str) -> ChartTemplate:
        return get_template(template_id,
                            extra=list(self.custom_templates.values()))

    # -- mutations ----------------------------------------------------------

    def upload_table(self, t: Table) -> list[DataConcept]:
        table_id = self._new_table_id()
        self.tables[table_id] = t
        self.current_table_id = table_id
        concepts = self.shelf.load_original_concepts(t, table_id)
        self._log("upload", table=_table_to_dict(t))
        self._bump()
        return concepts

    def create_custom_concept(self, name: str, examples) -> DataConcept:
        c = self.shelf.create_custom(name, examples)
        self._log("custom_concept", name=name,
                  examples=[_value_to_json(v) for v in examples])
        self._bump()
        return c

    def derive_preview(self, source_ids: Sequence[str], description: str,
                       backend) -> list[codegen.CandidateFormula]:
        req = self._derivation_request(source_ids, description)
        simple, analytical = codegen.build_prompts(req)
        candidates = codegen.generate_candidates(req, backend)
        self._log("derive_preview", description=description,
                  source_ids=list(source_ids),
                  prompts=[simple, analytical],
                  candidates=[c.source_text for c in candidates])
        return candidates

    def create_derived_concept(self, name: str, source_ids: Sequence[str],
                               description: str,
                               formula_text: str) -> DataConcept:
        req = self._derivation_request(source_ids, description)
        candidate = codegen.filter_candidate(req, formula_text)
        c = self.shelf.create_derived(name, source_ids, description,
                                      candidate.formula, formula_text)
        if all(self.shelf.get(s).known for s in source_ids):
            self._materialize_derived(c)
        self._log("derived_concept", name=name, source_ids=list(source_ids),
                  description=description, formula_text=formula_text)
        self._bump()
        return c

    def register_template(self, template_id: str, doc: str) -> ChartTemplate:
        template = register_custom_template(template_id, doc)
        self.custom_templates[template_id] = template
        self._log("custom_template", template_id=template_id, doc=doc)
        self._bump()
        return template

    def _derivation_request(self, source_ids, description):
        sources = []
        for sid in source_ids:
            c = self.shelf.get(sid)
            sources.append(codegen.SourceSpec(
                c.name, c.semantic_type, c.example_values[:3]))
        return codegen.DerivationRequest(
            description=description, sources=tuple(sources),
            target_name="derived")

    def _materialize_derived(self, c: DataConcept):
        """Extend the current table with the derived column, in place."""
        extended = self._extend_with_derived(self.current_table, c)
        table_id = self._new_table_id()
        self.tables[table_id] = extended
        self.current_table_id = table_id
        self.shelf.rebind_known(extended, table_id)
        c.resolution = ColumnRef(table_id, c.name)
        c.semantic_type = extended.columns[
            extended.column_index(c.name)].sem_type

    def _extend_with_derived(self, t: Table, c: DataConcept) -> Table:
        source_cols = [self.shelf.get(s).name for s in c.sources]
        return apply_derivation(t, c.formula, source_cols, c.name)

    # -- the formulate pipeline ---------------------------------------------

    def formulate(self, template_id: str,
                  encodings: Sequence[EncodingRequest]):
        template = self._template(template_id)
        concepts = [self.shelf.get(e.concept_id)
                    for e in encodings if e.concept_id is not None]
        unknowns = [c for c in concepts if not c.known]
        if not unknowns:
            table = self._extended_current_table(concepts)
            candidate = self._build_candidate(
                table, template, encodings,
                Provenance("none", self._formula_pairs(concepts), ()), (), 0)
            return Ready((candidate,))

        columns = tuple(c.name for c in concepts)
        seed = max(unknowns, key=lambda c: len(c.example_values))
        prefill = seed.prefill_values()
        if not prefill:
            raise NoUnknownExamples(
                f"concept {seed.name!r} has no example values to prefill")
        rows = []
        for v in prefill[:2]:
            rows.append(tuple(v if name == seed.name else None
                              for name in columns))
        while len(rows) < 2:
            rows.append(tuple(None for _ in columns))
        pending = PendingFormulate(template_id, tuple(encodings), columns,
                                   self.version)
        return NeedsExampleRelation(columns, tuple(rows), pending)

    def complete_formulate(self, pending: PendingFormulate,
                           example: ExampleRelation,
                           limits: SynthesisLimits = SynthesisLimits()):
        if pending.session_version != self.version:
            raise StaleCandidate("session advanced; re-formulate")
        if tuple(example.columns) != tuple(pending.columns):
            raise ExampleMismatch(
                f"example columns {example.columns} do not match the "
                f"requested {pending.columns}")
        template = self._template(pending.template_id)
        concepts = [self.shelf.get(e.concept_id)
                    for e in pending.encodings if e.concept_id is not None]
        results = synthesize(self.current_table, example, limits)
        candidates = []
        for result in results:
            try:
                candidates.append(self._candidate_from_result(
                    result, template, pending, concepts, len(candidates)))
            except (ReshapeError, DerivationError, FormulaError):
                continue  # a failing candidate is dropped, others survive
        if not candidates:
            raise SessionError("all synthesized candidates failed evaluation")
        self._log("formulate_candidates",
                  programs=[c.provenance.reshape_program
                            for c in candidates])
        return Ready(tuple(candidates))

    def _candidate_from_result(self, result, template, pending, concepts,
                               index) -> ChartCandidate:
        out = eval_program(result.program, self.current_table)
        # rename the bound output columns to the concept names
        rename = {col: name for name, col in result.column_binding.items()}
        columns, seen = [], set()
        for c in out.columns:
            new_name = rename.get(c.name, c.name)
            if new_name in seen or (new_name != c.name
                                    and new_name in out.column_names
                                    and new_name not in rename.values()):
                raise ReshapeError(f"rename collision on {new_name!r}")
            seen.add(new_name)
            columns.append((new_name, c.sem_type))
        table = build_table(out.name, columns, out.rows)
        table = self._apply_encoded_derivations(table, concepts)
        resolved = tuple(
            (c.id, c.name) for c in concepts
            if not c.known and c.name in table.column_names)
        spec = self._assemble(template, pending.encodings, concepts, table)
        return ChartCandidate(
            table=table, spec=spec,
            provenance=Provenance(
                result.program_text, self._formula_pairs(concepts),
                tuple(sorted(result.column_binding.items()))),
            session_version=self.version,
            resolved_binding=resolved, index=index)

    def _extended_current_table(self, concepts) -> Table:
        table = self.current_table
        return self._apply_encoded_derivations(table, concepts)

    def _apply_encoded_derivations(self, table: Table, concepts) -> Table:
        # reshape first, then derive: derived columns are appended here,
        # after any reshaping, in dependency order
        remaining = [c for c in concepts if c.formula_text
                     and c.name not in table.column_names]
        progress = True
        while remaining and progress:
            progress = False
            for c in list(remaining):
                source_names = [self.shelf.get(s).name for s in c.sources]
                if all(n in table.column_names for n in source_names):
                    table = apply_derivation(table, c.formula,
                                             source_names, c.name)
                    remaining.remove(c)
                    progress = True
        if remaining:
            raise DerivationError(
                f"cannot materialize {[c.name for c in remaining]}: "
                f"source columns missing")
        return table

    def _formula_pairs(self, concepts) -> tuple:
        return tuple((c.name, c.formula_text)
                     for c in concepts if c.formula_text)

    def _assemble(self, template, encodings, concepts, table: Table) -> dict:
        by_id = {c.id: c for c in concepts}
        chart_encodings = []
        for e in encodings:
            concept = by_id.get(e.concept_id)
            if concept is not None and (
                    not concept.known
                    or concept.resolution.column not in table.column_names):
                concept = dataclasses.replace(
                    concept, resolution=ColumnRef(table.name, concept.name))
            chart_encodings.append(
                Encoding(e.channel, concept, aggregate=e.aggregate))
        return assemble_spec(template, chart_encodings, table)

    def _build_candidate(self, table, template, encodings, provenance,
                         resolved, index) -> ChartCandidate:
        concepts = [self.shelf.get(e.concept_id)
                    for e in encodings if e.concept_id is not None]
        spec = self._assemble(template, encodings, concepts, table)
        return ChartCandidate(table, spec, provenance, self.version,
                              resolved, index)

    def save_chart(self, candidate: ChartCandidate,
                   _event: Optional[dict] = None) -> str:
        if candidate.session_version != self.version:
            raise StaleCandidate("session advanced since candidate creation")
        table_id = self._new_table_id()
        self.tables[table_id] = candidate.table
        self.current_table_id = table_id
        self.shelf.rebind_known(candidate.table, table_id)
        if candidate.resolved_binding:
            self.shelf.resolve(dict(candidate.resolved_binding),
                               candidate.table, table_id)
        chart_id = f"chart{len(self.saved_charts) + 1}"
        self.saved_charts.append({
            "id": chart_id,
            "table_id": table_id,
            "spec": candidate.spec,
            "provenance": {
                "reshape_program": candidate.provenance.reshape_program,
                "formulas": [list(p) for p in candidate.provenance.formulas],
                "column_binding": [list(p) for p in
                                   candidate.provenance.column_binding],
            },
        })
        self._log("save_chart", **(_event or {}))
        self._bump()
        return chart_id

    # -- high-level save that records a replayable event --------------------

    def formulate_and_save(self, template_id: str,
                           encodings: Sequence[EncodingRequest],
                           example_rows=None, candidate_index: int = 0) -> str:
        """One replayable step: formulate (completing with example_rows if
        asked), then save the chosen candidate."""
        outcome = self.formulate(template_id, encodings)
        if isinstance(outcome, NeedsExampleRelation):
            if example_rows is None:
                raise ExampleMismatch("an example relation is required")
            example = ExampleRelation(outcome.columns, tuple(example_rows))
            outcome = self.complete_formulate(outcome.pending, example)
        candidate = outcome.candidates[candidate_index]
        return self.save_chart(candidate, _event={
            "template_id": template_id,
            "encodings": [e.to_dict() for e in encodings],
            "example_rows": ([[_value_to_json(v) for v in row]
                              for row in example_rows]
                             if example_rows is not None else None),
            "candidate_index": candidate_index,
        })

    # -- persistence and replay ---------------------------------------------

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "id": self.id,
            "tables": {tid: _table_to_dict(t)
                       for tid, t in self.tables.items()},
            "current_table_id": self.current_table_id,
            "concepts": self.shelf.to_dicts(),
            "saved_charts": self.saved_charts,
            "custom_templates": {tid: t.custom_doc
                                 for tid, t in self.custom_templates.items()},
            "audit_log": self.audit_log,
            "version": self.version,
            "table_counter": self._table_counter,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Session":
        s = cls(d["id"])
        s.tables = {tid: _table_from_dict(td)
                    for tid, td in d["tables"].items()}
        s.current_table_id = d["current_table_id"]
        s.shelf = ConceptShelf.from_dicts(d["concepts"])
        s.saved_charts = list(d["saved_charts"])
        s.custom_templates = {
            tid: register_custom_template(tid, doc)
            for tid, doc in d.get("custom_templates", {}).items()}
        s.audit_log = list(d["audit_log"])
        s.version = d["version"]
        s._table_counter = d["table_counter"]
        return s

    @classmethod
    def replay(cls, session_id: str, events: Sequence[dict]) -> "Session":
        """Rebuild a session from its audit log."""
        s = cls(session_id)
        for event in events:
            kind = event["type"]
            if kind == "upload":
                s.upload_table(_table_from_dict(event["table"]))
            elif kind == "custom_concept":
                s.create_custom_concept(
                    event["name"],
                    [_json_to_value(v) for v in event["examples"]])
            elif kind == "derived_concept":
                s.create_derived_concept(
                    event["name"], event["source_ids"],
                    event["description"], event["formula_text"])
            elif kind == "custom_template":
                s.register_template(event["template_id"], event["doc"])
            elif kind == "save_chart":
                rows = event.get("example_rows")
                s.formulate_and_save(
                    event["template_id"],
                    [EncodingRequest.from_dict(e)
                     for e in event["encodings"]],
                    example_rows=([tuple(_json_to_value(v) for v in row)
                                   for row in rows]
                                  if rows is not None else None),
                    candidate_index=event.get("candidate_index", 0))
            elif kind == "derive_preview":
                # observation events carry over verbatim; candidate events
                # are regenerated by the save_chart replay above
                s.audit_log.append(dict(event))
        return s


def _table_to_dict(t: Table) -> dict:
    return {
        "name": t.name,
        "columns": [[c.name, c.sem_type.value] for c in t.columns],
        "rows": [[_value_to_json(v) for v in row] for row in t.rows],
    }


def _table_from_dict(d: dict) -> Table:
    columns = [(name, SemanticType(st)) for name, st in d["columns"]]
    rows = []
    for row in d["rows"]:
        rows.append(tuple(
            _typed_json_value(v, columns[i][1])
            for i, v in enumerate(row)))
    return build_table(d["name"], columns, rows)


def _typed_json_value(v, sem_type: SemanticType):
    from .values import parse_scalar

    if v is None or not isinstance(v, str):
        return v
    if sem_type in (SemanticType.DATE, SemanticType.DATETIME):
        parsed = parse_scalar(v, sem_type)
        return parsed if parsed is not None else v
    return v
