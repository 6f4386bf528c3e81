"""Immutable typed tables with CSV / JSON-rows ingestion and serialization."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .values import (
    SemanticType,
    Value,
    canonical_key,
    infer_type,
    is_null_token,
    parse_scalar,
    render_text,
    representable_in,
)


class TableError(Exception):
    """Base class for table construction / ingestion errors."""


class MalformedInput(TableError):
    pass


class EmptyHeader(TableError):
    pass


class DuplicateColumn(TableError):
    pass


@dataclass(frozen=True)
class Column:
    name: str
    sem_type: SemanticType


@dataclass(frozen=True)
class Table:
    """Ordered, uniquely named, typed columns over rows of cell values.

    Tables are immutable; every transformation returns a new table.
    """

    name: str
    columns: tuple[Column, ...]
    rows: tuple[tuple[Value, ...], ...]

    def __post_init__(self):
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise DuplicateColumn(f"duplicate column name(s): {dupes}")
        for row in self.rows:
            if len(row) != len(self.columns):
                raise TableError(
                    f"row arity {len(row)} != column count {len(self.columns)}")
            for cell, col in zip(row, self.columns):
                if not representable_in(cell, col.sem_type):
                    raise TableError(
                        f"cell {cell!r} not representable in {col.sem_type.value} "
                        f"column {col.name!r}")

    @property
    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]

    def column_index(self, name: str) -> int:
        for i, c in enumerate(self.columns):
            if c.name == name:
                return i
        raise KeyError(name)

    def column_values(self, name: str) -> list[Value]:
        i = self.column_index(name)
        return [row[i] for row in self.rows]

    def canonical_rows(self) -> list[tuple]:
        """Rows rendered as canonical keys, for order-insensitive comparison."""
        return [tuple(canonical_key(v) for v in row) for row in self.rows]

    def equals_canonically(self, other: "Table", ignore_order: bool = False) -> bool:
        if self.column_names != other.column_names:
            return False
        a, b = self.canonical_rows(), other.canonical_rows()
        if ignore_order:
            return sorted(map(repr, a)) == sorted(map(repr, b))
        return a == b


def build_table(name: str, columns: Sequence[tuple[str, SemanticType]],
                rows: Iterable[Sequence[Value]]) -> Table:
    return Table(
        name=name,
        columns=tuple(Column(n, t) for n, t in columns),
        rows=tuple(tuple(r) for r in rows),
    )


def table_from_raw(name: str, header: Sequence[str],
                   raw_rows: Sequence[Sequence[str | None]]) -> Table:
    """Type-infer and parse a grid of raw strings (None = missing cell)."""
    if not header:
        raise EmptyHeader("input has no columns")
    if len(set(header)) != len(header):
        raise DuplicateColumn(f"duplicate header column in {list(header)}")
    n = len(header)
    grid = [list(r[:n]) + [None] * (n - len(r)) for r in raw_rows]
    columns = []
    for j, col_name in enumerate(header):
        evidence = [row[j] for row in grid if row[j] is not None]
        columns.append((col_name, infer_type([v for v in evidence])))
    rows = []
    for raw in grid:
        row = []
        for j, (_, sem_type) in enumerate(columns):
            cell = raw[j]
            if cell is None or is_null_token(cell):
                row.append(None)
            else:
                parsed = parse_scalar(cell, sem_type)
                if parsed is None:  # unreachable after inference
                    parsed = cell
                row.append(parsed)
        rows.append(row)
    return build_table(name, columns, rows)


def parse_table(data: bytes | str, fmt: str, name: str = "table") -> Table:
    """Ingest CSV (RFC-4180, header row mandatory) or JSON rows (array of flat objects)."""
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    if fmt == "csv":
        return _parse_csv(text, name)
    if fmt == "json-rows":
        return _parse_json_rows(text, name)
    raise ValueError(f"unknown format {fmt!r}")


def _parse_csv(text: str, name: str) -> Table:
    try:
        reader = csv.reader(io.StringIO(text), strict=True)
        records = list(reader)
    except csv.Error as exc:
        raise MalformedInput(f"bad csv: {exc}") from exc
    if not records or not any(records[0]):
        raise EmptyHeader("csv has no header row")
    header, body = records[0], records[1:]
    body = [r for r in body if r]  # trailing blank lines
    return table_from_raw(name, header, body)


def _parse_json_rows(text: str, name: str) -> Table:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedInput(f"bad json: {exc}") from exc
    if not isinstance(doc, list) or not all(isinstance(r, dict) for r in doc):
        raise MalformedInput("json-rows input must be an array of objects")
    header: list[str] = []
    for record in doc:
        for key in record:
            if key not in header:
                header.append(key)
    if not header:
        raise EmptyHeader("json rows carry no keys")
    raw_rows = []
    for record in doc:
        raw_rows.append([
            None if key not in record or record[key] is None
            else _json_scalar_to_raw(record[key])
            for key in header
        ])
    return table_from_raw(name, header, raw_rows)


def _json_scalar_to_raw(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (dict, list)):
        raise MalformedInput("json-rows objects must be flat")
    return str(v)


def serialize_table(t: Table, fmt: str) -> bytes:
    """Inverse of parse_table up to type re-inference."""
    if fmt == "csv":
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(t.column_names)
        for row in t.rows:
            writer.writerow([render_text(v) if v is not None else "" for v in row])
        return out.getvalue().encode("utf-8")
    if fmt == "json-rows":
        records = []
        for row in t.rows:
            records.append({
                c.name: _value_to_json(v)
                for c, v in zip(t.columns, row)
            })
        return json.dumps(records, indent=2).encode("utf-8")
    raise ValueError(f"unknown format {fmt!r}")


def _value_to_json(v: Value):
    if v is None or isinstance(v, (bool, int, float, str)):
        return v
    return render_text(v)  # dates serialize as ISO text


def _json_to_value(v) -> Value:
    """Inverse of _value_to_json: strings re-enter via the inference ladder."""
    if not isinstance(v, str):
        return v
    return parse_scalar(v, infer_type([v]))


def table_to_records(t: Table) -> list[dict]:
    """Rows as JSON-ready dicts (dates rendered ISO), e.g. for inline chart data."""
    return [
        {c.name: _value_to_json(v) for c, v in zip(t.columns, row)}
        for row in t.rows
    ]
