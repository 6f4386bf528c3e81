"""Table reshaping programs: pivot_longer / pivot_wider / separate / separate_rows.

A program is a small AST rooted at an input reference; evaluation is pure and
deterministic. ``output_schema`` is the static half of evaluation, reused by
the synthesizer's pruner (pivot_wider column names are data dependent, so the
static schema draws them from the distinct values of the name column).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .table import Column, Table, build_table
from .values import (
    SemanticType,
    Value,
    canonical_key,
    render_text,
    representable_in,
    unify_types,
)

# Delimiters the system considers for separate / separate_rows.
DELIMITERS = [",", ";", "|", "-", "_", "/", ":", " "]


class ReshapeError(Exception):
    pass


class UnknownColumn(ReshapeError):
    pass


class DuplicateOutputColumn(ReshapeError):
    pass


class NonScalarGroup(ReshapeError):
    """A pivot_wider group holds conflicting values for one generated column."""


SchemaError = ReshapeError


@dataclass(frozen=True)
class InputRef:
    def __str__(self):
        return "(input)"


@dataclass(frozen=True)
class PivotLonger:
    child: "ReshapeProgram"
    columns: tuple[str, ...]
    key_name: str = "key"
    value_name: str = "value"

    def __str__(self):
        cols = " ".join(f'"{c}"' for c in self.columns)
        return (f'(pivot_longer {self.child} columns=[{cols}] '
                f'key_name="{self.key_name}" value_name="{self.value_name}")')


@dataclass(frozen=True)
class PivotWider:
    child: "ReshapeProgram"
    name_col: str
    value_col: str

    def __str__(self):
        return (f'(pivot_wider {self.child} name_col="{self.name_col}" '
                f'value_col="{self.value_col}")')


@dataclass(frozen=True)
class Separate:
    child: "ReshapeProgram"
    col: str
    left_name: str
    right_name: str
    delimiter: str

    def __str__(self):
        return (f'(separate {self.child} col="{self.col}" left="{self.left_name}" '
                f'right="{self.right_name}" delimiter="{self.delimiter}")')


@dataclass(frozen=True)
class SeparateRows:
    child: "ReshapeProgram"
    col: str
    delimiter: str

    def __str__(self):
        return (f'(separate_rows {self.child} col="{self.col}" '
                f'delimiter="{self.delimiter}")')


ReshapeProgram = Union[InputRef, PivotLonger, PivotWider, Separate, SeparateRows]


def program_size(p: ReshapeProgram) -> int:
    """Operator count, excluding the input reference."""
    if isinstance(p, InputRef):
        return 0
    return 1 + program_size(p.child)


def program_to_text(p: ReshapeProgram) -> str:
    return str(p)


def eval_program(p: ReshapeProgram, t: Table) -> Table:
    if isinstance(p, InputRef):
        return t
    child = eval_program(p.child, t)
    if isinstance(p, PivotLonger):
        return _pivot_longer(child, p)
    if isinstance(p, PivotWider):
        return _pivot_wider(child, p)
    if isinstance(p, Separate):
        return _separate(child, p)
    if isinstance(p, SeparateRows):
        return _separate_rows(child, p)
    raise TypeError(f"not a reshape program: {p!r}")


def _require_columns(t: Table, names) -> None:
    for name in names:
        if name not in t.column_names:
            raise UnknownColumn(f"column {name!r} not in {t.column_names}")


def _pivot_longer(t: Table, p: PivotLonger) -> Table:
    _require_columns(t, p.columns)
    if not p.columns or set(p.columns) >= set(t.column_names):
        raise ReshapeError("pivot_longer columns must be a non-empty strict subset")
    keep = [c for c in t.columns if c.name not in p.columns]
    keep_idx = [t.column_index(c.name) for c in keep]
    melted_types = [t.columns[t.column_index(c)].sem_type for c in p.columns]
    value_type = unify_types(melted_types)
    out_cols = ([(c.name, c.sem_type) for c in keep]
                + [(p.key_name, SemanticType.TEXT), (p.value_name, value_type)])
    if len({n for n, _ in out_cols}) != len(out_cols):
        raise DuplicateOutputColumn(
            f"key/value names collide with retained columns in {p}")
    rows = []
    for row in t.rows:
        for col_name in p.columns:
            cell = row[t.column_index(col_name)]
            if cell is not None and not representable_in(cell, value_type):
                cell = render_text(cell)
            rows.append([row[i] for i in keep_idx] + [col_name, cell])
    return build_table(t.name, out_cols, rows)


def _pivot_wider(t: Table, p: PivotWider) -> Table:
    _require_columns(t, [p.name_col, p.value_col])
    if p.name_col == p.value_col:
        raise ReshapeError("pivot_wider name and value columns must differ")
    name_i, value_i = t.column_index(p.name_col), t.column_index(p.value_col)
    keep = [c for c in t.columns if c.name not in (p.name_col, p.value_col)]
    keep_idx = [t.column_index(c.name) for c in keep]
    value_type = t.columns[value_i].sem_type

    new_names: list[str] = []  # first-encounter order
    group_rows: dict[tuple, list[Value]] = {}
    groups: dict[tuple, dict[str, Value]] = {}
    order: list[tuple] = []
    for row in t.rows:
        key = tuple(canonical_key(row[i]) for i in keep_idx)
        if key not in groups:
            group_rows[key] = [row[i] for i in keep_idx]
            groups[key] = {}
            order.append(key)
        new_name = render_text(row[name_i])
        if new_name not in new_names:
            new_names.append(new_name)
        bucket = groups[key]
        if new_name in bucket and canonical_key(
                bucket[new_name]) != canonical_key(row[value_i]):
            raise NonScalarGroup(
                f"group {key} has conflicting values for {new_name!r}")
        bucket[new_name] = row[value_i]

    retained = {c.name for c in keep}
    for new_name in new_names:
        if new_name in retained:
            raise DuplicateOutputColumn(
                f"pivot_wider would generate existing column {new_name!r}")
    out_cols = [(c.name, c.sem_type) for c in keep] + [
        (n, value_type) for n in new_names]
    rows = []
    for key in order:
        bucket = groups[key]
        rows.append(group_rows[key] + [bucket.get(n) for n in new_names])
    return build_table(t.name, out_cols, rows)


def _split_first(cell: Value, delimiter: str) -> tuple[Value, Value]:
    if cell is None:
        return None, None
    text = render_text(cell)
    if delimiter in text:
        left, _, right = text.partition(delimiter)
        return left.strip(), right.strip()
    return text.strip(), None


def _separate(t: Table, p: Separate) -> Table:
    _require_columns(t, [p.col])
    i = t.column_index(p.col)
    out_cols = []
    for c in t.columns:
        if c.name == p.col:
            out_cols.append((p.left_name, SemanticType.TEXT))
            out_cols.append((p.right_name, SemanticType.TEXT))
        else:
            out_cols.append((c.name, c.sem_type))
    if len({n for n, _ in out_cols}) != len(out_cols):
        raise DuplicateOutputColumn(f"separate output names collide in {p}")
    rows = []
    for row in t.rows:
        left, right = _split_first(row[i], p.delimiter)
        out = list(row[:i]) + [left, right] + list(row[i + 1:])
        rows.append(out)
    return build_table(t.name, out_cols, rows)


def split_tokens(cell: Value, delimiter: str) -> list[str]:
    return [tok.strip() for tok in render_text(cell).split(delimiter)]


def _separate_rows(t: Table, p: SeparateRows) -> Table:
    _require_columns(t, [p.col])
    i = t.column_index(p.col)
    out_cols = [(c.name, SemanticType.TEXT if c.name == p.col else c.sem_type)
                for c in t.columns]
    rows = []
    for row in t.rows:
        cell = row[i]
        if cell is None:
            tokens: list[Value] = [None]
        else:
            tokens = split_tokens(cell, p.delimiter)
        for tok in tokens:
            out = list(row)
            out[i] = tok
            rows.append(out)
    return build_table(t.name, out_cols, rows)


def output_schema(p: ReshapeProgram, t: Table) -> list[tuple[str, SemanticType]]:
    """Result schema without materializing rows.

    pivot_wider's generated names come from the distinct values of its name
    column, so the table's value inventory is consulted; nested programs run
    the same static rules over a column-wise value abstraction.
    """
    schema, _ = _abstract_eval(p, t)
    return schema


def _abstract_eval(p, t: Table):
    """Returns (schema, per-column distinct value sets as text renderings)."""
    if isinstance(p, InputRef):
        schema = [(c.name, c.sem_type) for c in t.columns]
        inventory = {
            c.name: {render_text(v) for v in t.column_values(c.name) if v is not None}
            for c in t.columns
        }
        return schema, inventory
    schema, inv = _abstract_eval(p.child, t)
    names = [n for n, _ in schema]
    types = dict(schema)
    if isinstance(p, PivotLonger):
        for c in p.columns:
            if c not in names:
                raise UnknownColumn(f"column {c!r} not in {names}")
        if not p.columns or set(p.columns) >= set(names):
            raise SchemaError("pivot_longer columns must be a non-empty strict subset")
        keep = [n for n in names if n not in p.columns]
        out = ([(n, types[n]) for n in keep]
               + [(p.key_name, SemanticType.TEXT),
                  (p.value_name, unify_types(types[c] for c in p.columns))])
        if len({n for n, _ in out}) != len(out):
            raise DuplicateOutputColumn(str(p))
        out_inv = {n: inv[n] for n in keep}
        out_inv[p.key_name] = set(p.columns)
        out_inv[p.value_name] = set().union(*(inv[c] for c in p.columns))
        return out, out_inv
    if isinstance(p, PivotWider):
        for c in (p.name_col, p.value_col):
            if c not in names:
                raise UnknownColumn(f"column {c!r} not in {names}")
        keep = [n for n in names if n not in (p.name_col, p.value_col)]
        generated = sorted(inv[p.name_col])
        for g in generated:
            if g in keep:
                raise DuplicateOutputColumn(
                    f"pivot_wider would generate existing column {g!r}")
        out = [(n, types[n]) for n in keep] + [
            (g, types[p.value_col]) for g in generated]
        out_inv = {n: inv[n] for n in keep}
        for g in generated:
            out_inv[g] = set(inv[p.value_col])
        return out, out_inv
    if isinstance(p, Separate):
        if p.col not in names:
            raise UnknownColumn(f"column {p.col!r} not in {names}")
        out = []
        for n in names:
            if n == p.col:
                out.append((p.left_name, SemanticType.TEXT))
                out.append((p.right_name, SemanticType.TEXT))
            else:
                out.append((n, types[n]))
        if len({n for n, _ in out}) != len(out):
            raise DuplicateOutputColumn(str(p))
        tokens = set()
        for v in inv[p.col]:
            left, _, right = v.partition(p.delimiter)
            tokens.add(left.strip())
            tokens.add(right.strip())
        out_inv = {n: inv[n] for n in names if n != p.col}
        out_inv[p.left_name] = set(tokens)
        out_inv[p.right_name] = set(tokens)
        return out, out_inv
    if isinstance(p, SeparateRows):
        if p.col not in names:
            raise UnknownColumn(f"column {p.col!r} not in {names}")
        out = [(n, SemanticType.TEXT if n == p.col else types[n]) for n in names]
        out_inv = dict(inv)
        out_inv[p.col] = {
            tok for v in inv[p.col] for tok in split_tokens(v, p.delimiter)}
        return out, out_inv
    raise TypeError(f"not a reshape program: {p!r}")
