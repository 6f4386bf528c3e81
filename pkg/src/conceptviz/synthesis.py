"""Programming-by-example search over reshaping programs.

Given an input table T and a small example relation E, find programs p with
E contained in p(T) (multiset row containment under an injective column
binding). Search is enumerative in ranking order — AST size first, then
operator order (identity < pivot_wider < pivot_longer < separate <
separate_rows), then parameter column order — and pruned by a sound value
inventory abstraction: no reshaping operator can invent a cell value that is
not already a cell, a column name, or a delimiter-split token of the input.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field

from .reshape import (
    DELIMITERS,
    InputRef,
    PivotLonger,
    PivotWider,
    ReshapeError,
    ReshapeProgram,
    Separate,
    SeparateRows,
    eval_program,
    program_size,
    program_to_text,
    split_tokens,
)
from .table import Table
from .values import SemanticType, Value, canonical_key, render_text

# Placeholder output names used during enumeration; the caller renames bound
# columns to the example relation's own column names afterwards.
KEY_PLACEHOLDER = "#key"
VALUE_PLACEHOLDER = "#value"
LEFT_SUFFIX = "#1"
RIGHT_SUFFIX = "#2"

MAX_MELT_SUBSET = 6


class SynthesisError(Exception):
    pass


class Timeout(SynthesisError):
    pass


@dataclass(frozen=True)
class NoProgramDiagnostic:
    """Why the search failed: example values no program can ever produce."""

    unreachable: tuple[str, ...]
    nearest: dict[str, list[str]]

    def describe(self) -> str:
        if not self.unreachable:
            return "search space exhausted without a satisfying program"
        parts = []
        for v in self.unreachable:
            hint = self.nearest.get(v)
            if hint:
                parts.append(f"{v!r} (closest table values: {', '.join(hint)})")
            else:
                parts.append(repr(v))
        return ("example values not reachable from the input table: "
                + "; ".join(parts))


class NoProgram(SynthesisError):
    def __init__(self, diagnostic: NoProgramDiagnostic):
        super().__init__(diagnostic.describe())
        self.diagnostic = diagnostic


@dataclass(frozen=True)
class ExampleRelation:
    columns: tuple[str, ...]
    rows: tuple[tuple[Value, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "rows", tuple(tuple(r) for r in self.rows))
        if len(self.columns) < 1:
            raise ValueError("example relation needs at least one column")
        if len(self.rows) < 2:
            raise ValueError("example relation needs at least two rows")
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError("example relation must be rectangular")
            if any(cell is None for cell in row):
                raise ValueError("example relation cells may not be null")


@dataclass(frozen=True)
class SynthesisLimits:
    max_depth: int = 2
    max_candidates: int = 5
    timeout_seconds: float = 10.0

    def __post_init__(self):
        if self.max_depth <= 0 or self.max_candidates <= 0 or self.timeout_seconds <= 0:
            raise ValueError("synthesis limits must be positive")


@dataclass(frozen=True)
class SynthesisResult:
    program: ReshapeProgram
    column_binding: dict  # example column -> output column
    rank_key: tuple  # (ast_size, tie_break_text)

    @property
    def program_text(self) -> str:
        return program_to_text(self.program)


def abstract_inventory(t: Table) -> set:
    """Canonical keys of every value any reshaping program could produce.

    Closure over: all cells, all column names (reachable via pivot_longer's
    key column), and every delimiter-split token of a text rendering
    (reachable via separate / separate_rows).
    """
    inventory: set = set()
    texts: set[str] = set()

    def add(v):
        inventory.add(canonical_key(v))
        if v is not None:
            # type unification (e.g. pivot_longer over mixed columns) can
            # re-render any value as text, so its rendering is reachable too
            inventory.add(canonical_key(render_text(v)))
            texts.add(render_text(v))

    for name in t.column_names:
        add(name)
        for cell in t.column_values(name):
            if cell is not None:
                add(cell)
    # Operator-generated column names are reachable as cells too: a second
    # melt surfaces the first melt's key/value column names, and separate's
    # suffixed names behave likewise.  Two generations cover depth-2 search.
    generated = {KEY_PLACEHOLDER, VALUE_PLACEHOLDER}
    base_names = set(t.column_names) | generated
    for _ in range(2):
        base_names |= {n + LEFT_SUFFIX for n in base_names} \
            | {n + RIGHT_SUFFIX for n in base_names}
    for name in base_names:
        add(name)
    # Tokens from splitting any reachable text at any considered delimiter;
    # iterate to closure (tokens of tokens remain reachable via chained ops).
    frontier = set(texts)
    while frontier:
        new: set[str] = set()
        for text in frontier:
            for delim in DELIMITERS:
                if delim in text:
                    for tok in split_tokens(text, delim):
                        if canonical_key(tok) not in inventory:
                            new.add(tok)
        for tok in new:
            inventory.add(canonical_key(tok))
        frontier = new
    return inventory


def unreachable_values(e: ExampleRelation, inventory: set) -> list[Value]:
    missing, seen = [], set()
    for row in e.rows:
        for cell in row:
            key = canonical_key(cell)
            if key not in inventory and key not in seen:
                seen.add(key)
                missing.append(cell)
    return missing


def _edit_distance(a: str, b: str) -> int:
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1,
                           prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def _nearest(value: Value, t: Table, k: int = 3) -> list[str]:
    target = render_text(value)
    pool = {render_text(c) for name in t.column_names
            for c in t.column_values(name) if c is not None}
    pool.update(t.column_names)
    ranked = sorted(pool, key=lambda s: (_edit_distance(target, s), s))
    return ranked[:k]


def check_subsumption(e: ExampleRelation, out: Table) -> dict | None:
    """Injective binding of example columns to output columns under which the
    multiset of example rows is contained in the projected output rows.

    Preference among valid bindings: exact column-name matches first, then
    output column order.
    """
    from collections import Counter

    out_names = out.column_names
    out_cols = {n: [canonical_key(v) for v in out.column_values(n)] for n in out_names}
    e_cols = {c: [canonical_key(row[i]) for row in e.rows]
              for i, c in enumerate(e.columns)}

    candidates: dict[str, list[str]] = {}
    for ec in e.columns:
        needed = set(e_cols[ec])
        opts = [oc for oc in out_names if needed <= set(out_cols[oc])]
        # prefer the exact name match, then schema order
        opts.sort(key=lambda oc: (oc != ec, out_names.index(oc)))
        if not opts:
            return None
        candidates[ec] = opts

    def multiset_ok(binding: dict) -> bool:
        projected = Counter(
            tuple(out_cols[binding[ec]][r] for ec in e.columns)
            for r in range(len(out.rows))
        )
        wanted = Counter(
            tuple(e_cols[ec][r] for ec in e.columns) for r in range(len(e.rows)))
        return all(projected[row] >= n for row, n in wanted.items())

    best: dict | None = None
    order = list(e.columns)

    def backtrack(i: int, binding: dict, used: set):
        nonlocal best
        if best is not None:
            return
        if i == len(order):
            if multiset_ok(binding):
                best = dict(binding)
            return
        ec = order[i]
        for oc in candidates[ec]:
            if oc in used:
                continue
            binding[ec] = oc
            used.add(oc)
            backtrack(i + 1, binding, used)
            del binding[ec]
            used.discard(oc)
            if best is not None:
                return

    backtrack(0, {}, set())
    return best


def prune_partial(partial: ReshapeProgram, t: Table, e: ExampleRelation,
                  remaining_depth: int) -> bool:
    """True = keep (some completion may still satisfy E); False = cut.

    Sound: (a) every example value must be in the value inventory of the
    partial result; (b) the completion must be able to host enough distinct
    columns for an injective binding.
    """
    try:
        out = eval_program(partial, t)
    except ReshapeError:
        return False
    inventory = abstract_inventory(out)
    if unreachable_values(e, inventory):
        return False
    # Column-count feasibility. Any operator's new columns are named by
    # distinct reachable values (pivot_wider) or add one column (separate), so
    # the inventory size is a sound per-step bound on column growth.
    max_cols = len(out.columns) + remaining_depth * max(1, len(inventory))
    return max_cols >= len(e.columns)


def _enumerate_extensions(base: ReshapeProgram, base_out: Table,
                          e: ExampleRelation | None = None):
    """All one-operator extensions of ``base`` in ranking order.

    When ``e`` is given the sweep skips whole operator groups whose outputs
    provably cannot contain every example value.  A pivot_wider result only
    rearranges the base's cells, and a pivot_longer result draws from the
    base's cells and column names, so a missing value rules the group out.
    This is a necessary condition on the extension itself — no satisfying
    program is ever skipped — which makes it safe to apply regardless of
    whether abstract pruning is enabled.  Callers must only pass ``e`` for
    extensions that will not themselves be extended further, since deeper
    completions (e.g. a later separate step) can mint new token values.
    """
    schema_names = base_out.column_names
    schema_types = {c.name: c.sem_type for c in base_out.columns}
    rearranged_ok = melted_ok = True
    if e is not None:
        need = {canonical_key(c) for row in e.rows for c in row}
        cell_keys: set = set()
        for nm in schema_names:
            for v in base_out.column_values(nm):
                if v is not None:
                    cell_keys.add(canonical_key(v))
                    cell_keys.add(canonical_key(render_text(v)))
        rearranged_ok = need <= cell_keys
        melted_ok = need <= cell_keys | {
            canonical_key(nm) for nm in schema_names}
    # pivot_wider: name columns with fewer distinct values first (tighter
    # generalization — fewer generated columns), then schema order
    distinct = {
        n: len({canonical_key(v) for v in base_out.column_values(n)})
        for n in schema_names}
    name_order = sorted(schema_names,
                        key=lambda n: (distinct[n], schema_names.index(n)))
    if rearranged_ok:
        for name_col in name_order:
            for value_col in schema_names:
                if value_col != name_col:
                    yield PivotWider(base, name_col, value_col)
    # pivot_longer: subsets by size descending, then schema order; capped size
    if melted_ok:
        n = len(schema_names)
        for size in range(min(n - 1, MAX_MELT_SUBSET), 0, -1):
            for subset in itertools.combinations(schema_names, size):
                yield PivotLonger(base, subset,
                                  KEY_PLACEHOLDER, VALUE_PLACEHOLDER)
    # separate / separate_rows on text columns, delimiters that actually occur
    for col in schema_names:
        if schema_types.get(col) is not SemanticType.TEXT:
            continue
        present = _present_delimiters(base_out, col)
        for delim in DELIMITERS:
            if delim in present:
                yield Separate(base, col, col + LEFT_SUFFIX, col + RIGHT_SUFFIX, delim)
    for col in schema_names:
        if schema_types.get(col) is not SemanticType.TEXT:
            continue
        present = _present_delimiters(base_out, col)
        for delim in DELIMITERS:
            if delim in present:
                yield SeparateRows(base, col, delim)


def _present_delimiters(base_out: Table, col: str) -> set[str]:
    cells = [render_text(v) for v in base_out.column_values(col) if v is not None]
    return {d for d in DELIMITERS if any(d in c for c in cells)}


def synthesize(t: Table, e: ExampleRelation,
               limits: SynthesisLimits = SynthesisLimits(),
               pruning: bool = True) -> list[SynthesisResult]:
    """Ranked programs whose output subsumes the example relation.

    Raises NoProgram (with an unreachable-value diagnostic) when the search
    space is exhausted, or Timeout past the configured budget.
    """
    if not t.rows:
        raise ValueError("input table is empty")
    deadline = time.monotonic() + limits.timeout_seconds
    inventory = abstract_inventory(t)
    missing = unreachable_values(e, inventory)
    if missing:
        raise NoProgram(_diagnose(missing, t))

    results: list[SynthesisResult] = []
    seen_outputs: set = set()
    counter = itertools.count()

    def consider(p: ReshapeProgram) -> None:
        try:
            out = eval_program(p, t)
        except ReshapeError:
            return
        binding = check_subsumption(e, out)
        if binding is None:
            return
        fingerprint = (tuple(out.column_names), tuple(map(tuple, out.canonical_rows())))
        if fingerprint in seen_outputs:
            return  # semantic duplicate; earlier (smaller / higher-ranked) wins
        seen_outputs.add(fingerprint)
        results.append(SynthesisResult(
            program=p,
            column_binding=binding,
            # enumeration follows rank order, so the tie break is the
            # enumeration position at this size
            rank_key=(program_size(p), f"{next(counter):08d}"),
        ))

    frontier: list[ReshapeProgram] = [InputRef()]
    consider(InputRef())
    for depth in range(1, limits.max_depth + 1):
        next_frontier: list[ReshapeProgram] = []
        for base in frontier:
            if time.monotonic() > deadline:
                raise Timeout(f"synthesis exceeded {limits.timeout_seconds}s")
            try:
                base_out = eval_program(base, t)
            except ReshapeError:
                continue
            # at the last depth extensions are leaves, so the value guard in
            # the enumerator may discard doomed operator groups wholesale
            leaf_guard = e if depth == limits.max_depth else None
            for i, p in enumerate(
                    _enumerate_extensions(base, base_out, leaf_guard)):
                if len(results) >= limits.max_candidates:
                    return results
                # a single wide base can have very many extensions; keep
                # the timeout cooperative inside the sweep too
                if i % 256 == 0 and time.monotonic() > deadline:
                    raise Timeout(
                        f"synthesis exceeded {limits.timeout_seconds}s")
                consider(p)
                if depth < limits.max_depth:
                    if not pruning or prune_partial(
                            p, t, e, limits.max_depth - depth):
                        next_frontier.append(p)
            if len(results) >= limits.max_candidates:
                return results
        frontier = next_frontier
    if not results:
        raise NoProgram(_diagnose([], t))
    return results


def _diagnose(missing: list[Value], t: Table) -> NoProgramDiagnostic:
    rendered = tuple(render_text(v) for v in missing)
    nearest = {render_text(v): _nearest(v, t) for v in missing}
    return NoProgramDiagnostic(unreachable=rendered, nearest=nearest)
