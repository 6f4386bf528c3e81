"""Formula evaluation: per-row interpretation and whole-column application."""

from __future__ import annotations

from typing import Optional, Sequence

from .builtins import BUILTINS, CONTEXT_BUILTINS, EvalContext
from .formula import (
    Binary,
    Call,
    Formula,
    If,
    IndexRef,
    Let,
    LetRef,
    Literal,
    ParamRef,
    Unary,
    ListRef,
)
from .table import Column, Table, build_table
from .values import (
    SemanticType,
    Value,
    render_text,
    type_of_value,
    unify_types,
)


class EvalError(Exception):
    """Internal invariant violation; unreachable after a successful type check."""


class DerivationError(Exception):
    pass


class UnknownColumn(DerivationError):
    pass


class DuplicateOutputColumn(DerivationError):
    pass


class TypeMismatch(DerivationError):
    pass


def eval_row(f: Formula, args: Sequence[Value], index: int = 0,
             lists: Optional[Sequence[Sequence[Value]]] = None,
             ctx: Optional[EvalContext] = None) -> Value:
    """Strict evaluation with Null propagation.

    Division (or modulo) by zero and out-of-range list access yield Null
    rather than raising.
    """
    if len(args) != len(f.params):
        raise EvalError(f"expected {len(f.params)} argument(s), got {len(args)}")
    if f.analytical and lists is None:
        raise EvalError("analytical formula evaluated without column lists")
    env = {name: value for (name, _), value in zip(f.params, args)}
    list_env = {}
    if f.analytical:
        list_env = {name: list(col)
                    for (name, _), col in zip(f.params, lists or [])}
    ctx = ctx or EvalContext()
    return _eval(f.body, env, list_env, index, ctx)


def _truthy(v):
    return v


def _eval(expr, env, list_env, index, ctx):
    if isinstance(expr, Literal):
        return expr.value
    if isinstance(expr, ParamRef):
        return env[expr.name]
    if isinstance(expr, IndexRef):
        return index
    if isinstance(expr, ListRef):
        return list_env[expr.param]
    if isinstance(expr, LetRef):
        return env[("let", expr.name)]
    if isinstance(expr, Let):
        value = _eval(expr.value, env, list_env, index, ctx)
        return _eval(expr.body, {**env, ("let", expr.name): value},
                     list_env, index, ctx)
    if isinstance(expr, Unary):
        v = _eval(expr.operand, env, list_env, index, ctx)
        if v is None:
            return None
        return (-v) if expr.op == "-" else (not v)
    if isinstance(expr, Binary):
        left = _eval(expr.left, env, list_env, index, ctx)
        right = _eval(expr.right, env, list_env, index, ctx)
        if left is None or right is None:
            return None
        return _binary(expr.op, left, right)
    if isinstance(expr, If):
        cond = _eval(expr.cond, env, list_env, index, ctx)
        if cond is None:
            return None
        branch = expr.then if cond else expr.otherwise
        return _eval(branch, env, list_env, index, ctx)
    if isinstance(expr, Call):
        spec = BUILTINS.get(expr.fn)
        if spec is None:
            raise EvalError(f"unknown builtin {expr.fn!r}")
        args = [_eval(a, env, list_env, index, ctx) for a in expr.args]
        if spec.null_propagating and any(
                a is None for a, t in zip(args, spec.arg_types) if t != "list"):
            return None
        try:
            if expr.fn in CONTEXT_BUILTINS:
                return spec.impl(ctx, *args)
            return spec.impl(*args)
        except (TypeError, ValueError, AttributeError) as exc:
            raise EvalError(f"builtin {expr.fn} failed: {exc}") from exc
    raise EvalError(f"unexpected node {expr!r}")


def _binary(op, left, right):
    if op == "+":
        return left + right
    if op == "-":
        return left - right
    if op == "*":
        return left * right
    if op == "/":
        if right == 0:
            return None
        return left / right
    if op == "%":
        if right == 0:
            return None
        return left % right
    if op == "==":
        return left == right
    if op == "!=":
        return left != right
    if op == "<":
        return left < right
    if op == "<=":
        return left <= right
    if op == ">":
        return left > right
    if op == ">=":
        return left >= right
    if op == "and":
        return bool(left) and bool(right)
    if op == "or":
        return bool(left) or bool(right)
    raise EvalError(f"unknown operator {op!r}")


def apply_derivation(t: Table, f: Formula, source_columns: Sequence[str],
                     out_name: str) -> Table:
    """Extend the table with one derived column.

    For analytical formulas a strict-window rule applies: a row whose window
    slice would extend past either end of the column yields Null.
    """
    for col in source_columns:
        if col not in t.column_names:
            raise UnknownColumn(f"column {col!r} not in {t.column_names}")
    if out_name in t.column_names:
        raise DuplicateOutputColumn(f"column {out_name!r} already exists")
    if len(source_columns) != len(f.params):
        raise TypeMismatch(
            f"formula takes {len(f.params)} parameter(s), "
            f"got {len(source_columns)} source column(s)")
    for (pname, ptype), col in zip(f.params, source_columns):
        if ptype is not None:
            actual = t.columns[t.column_index(col)].sem_type
            if not _column_type_ok(actual, ptype):
                raise TypeMismatch(
                    f"column {col!r} is {actual.value}, parameter {pname} "
                    f"expects {ptype.value}")

    lists = [t.column_values(c) for c in source_columns] if f.analytical else None
    out_values = []
    for i, row in enumerate(t.rows):
        args = [row[t.column_index(c)] for c in source_columns]
        ctx = EvalContext()
        value = eval_row(f, args, index=i, lists=lists, ctx=ctx)
        if ctx.truncated:
            value = None  # strict-window rule: incomplete windows are null
        out_values.append(value)

    out_type = _column_type_of(out_values)
    if out_type is SemanticType.TEXT:
        out_values = [None if v is None else render_text(v) for v in out_values]
    columns = [(c.name, c.sem_type) for c in t.columns] + [(out_name, out_type)]
    rows = [tuple(row) + (v,) for row, v in zip(t.rows, out_values)]
    return build_table(t.name, columns, rows)


def _column_type_of(values) -> SemanticType:
    kinds = {type_of_value(v) for v in values if v is not None}
    if not kinds:
        return SemanticType.TEXT
    return unify_types(kinds)


def _column_type_ok(actual: SemanticType, expected: SemanticType) -> bool:
    if actual == expected:
        return True
    if expected is SemanticType.FLOAT and actual is SemanticType.INTEGER:
        return True
    if expected is SemanticType.DATETIME and actual is SemanticType.DATE:
        return True
    return False
