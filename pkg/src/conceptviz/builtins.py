"""Builtin function catalog for the derivation formula language.

Every scalar builtin propagates Null: any Null argument yields a Null result.
List aggregations skip Null elements instead (and ``list_count_nonnull``
counts the survivors). ``slice`` clamps its half-open range to the list
bounds and reports the clamp to the evaluation context, which is how the
strict-window rule detects windows that fall off either end of a column.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass
from typing import Callable

from .values import SemanticType, Value

BOOL = SemanticType.BOOLEAN.value
INT = SemanticType.INTEGER.value
FLOAT = SemanticType.FLOAT.value
TEXT = SemanticType.TEXT.value
NUMBER = "number"
TEMPORAL = "temporal"
LIST = "list"
ANY = "any"


@dataclass(frozen=True)
class BuiltinSpec:
    name: str
    arg_types: tuple
    return_type: str
    impl: Callable
    null_propagating: bool = True  # scalar rule; list functions opt out


class EvalContext:
    """Per-evaluation scratch state (window truncation flag)."""

    def __init__(self):
        self.truncated = False


def _num(v):
    return v


def _sqrt(v):
    return math.sqrt(v) if v >= 0 else None


def _round(v):
    return int(round(v))


def _div_guard(f):
    def wrapped(a, b):
        if b == 0:
            return None
        return f(a, b)
    return wrapped


def _substring(s: str, start: int, end: int) -> str:
    n = len(s)
    a = max(0, min(int(start), n))
    b = max(a, min(int(end), n))
    return s[a:b]


def _split_part(s: str, delim: str, k: int):
    parts = s.split(delim) if delim else [s]
    k = int(k)
    if 0 <= k < len(parts):
        return parts[k]
    return None


def _weekday(d) -> int:
    # 0 = Monday ... 6 = Sunday
    return d.weekday()


def _nonnull(xs):
    return [x for x in xs if x is not None]


def _list_get(xs, i):
    i = int(i)
    if 0 <= i < len(xs):
        return xs[i]
    return None


def _slice(ctx: EvalContext, xs, a, b):
    a, b = int(a), int(b)
    lo = max(0, min(a, len(xs)))
    hi = max(lo, min(b, len(xs)))
    if a < 0 or b > len(xs):
        ctx.truncated = True
    return xs[lo:hi]


def _list_avg(xs):
    vals = _nonnull(xs)
    return sum(vals) / len(vals) if vals else None


def _list_sum(xs):
    vals = _nonnull(xs)
    return sum(vals) if vals else None


def _list_min(xs):
    vals = _nonnull(xs)
    return min(vals) if vals else None


def _list_max(xs):
    vals = _nonnull(xs)
    return max(vals) if vals else None


def _percentile_rank(xs, v):
    """Percent (0..100) of non-null elements below v, counting ties as half."""
    vals = _nonnull(xs)
    if not vals or v is None:
        return None
    below = sum(1 for x in vals if x < v)
    equal = sum(1 for x in vals if x == v)
    return 100.0 * (below + 0.5 * equal) / len(vals)


def _to_number(v):
    if isinstance(v, bool):
        return 1 if v else 0
    if isinstance(v, (int, float)):
        return v
    s = str(v).strip()
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return None


def _to_date(v):
    if isinstance(v, dt.datetime):
        return v.date()
    if isinstance(v, dt.date):
        return v
    from .values import parse_scalar
    return parse_scalar(str(v), SemanticType.DATE)


def _to_text(v) -> str:
    from .values import render_text
    return render_text(v)


def _spec(name, args, ret, impl, **kw) -> BuiltinSpec:
    return BuiltinSpec(name, tuple(args), ret, impl, **kw)


BUILTINS: dict[str, BuiltinSpec] = {s.name: s for s in [
    # numeric
    _spec("abs", [NUMBER], NUMBER, abs),
    _spec("round", [NUMBER], INT, _round),
    _spec("floor", [NUMBER], INT, lambda v: math.floor(v)),
    _spec("ceil", [NUMBER], INT, lambda v: math.ceil(v)),
    _spec("sqrt", [NUMBER], FLOAT, _sqrt),
    _spec("pow", [NUMBER, NUMBER], FLOAT, lambda a, b: float(a) ** b),
    _spec("min", [NUMBER, NUMBER], NUMBER, min),
    _spec("max", [NUMBER, NUMBER], NUMBER, max),
    # text
    _spec("concat", [TEXT, TEXT], TEXT, lambda a, b: a + b),
    _spec("upper", [TEXT], TEXT, str.upper),
    _spec("lower", [TEXT], TEXT, str.lower),
    _spec("trim", [TEXT], TEXT, str.strip),
    _spec("substring", [TEXT, NUMBER, NUMBER], TEXT, _substring),
    _spec("split_part", [TEXT, TEXT, NUMBER], TEXT, _split_part),
    _spec("text_length", [TEXT], INT, len),
    _spec("to_text", [ANY], TEXT, _to_text),
    # date
    _spec("year", [TEMPORAL], INT, lambda d: d.year),
    _spec("month", [TEMPORAL], INT, lambda d: d.month),
    _spec("day", [TEMPORAL], INT, lambda d: d.day),
    _spec("weekday", [TEMPORAL], INT, _weekday),
    # list (null handling is internal, not propagating)
    _spec("list_len", [LIST], INT, len, null_propagating=False),
    _spec("list_get", [LIST, NUMBER], ANY, _list_get),
    _spec("slice", [LIST, NUMBER, NUMBER], LIST, _slice),
    _spec("list_sum", [LIST], NUMBER, _list_sum, null_propagating=False),
    _spec("list_avg", [LIST], FLOAT, _list_avg, null_propagating=False),
    _spec("list_min", [LIST], NUMBER, _list_min, null_propagating=False),
    _spec("list_max", [LIST], NUMBER, _list_max, null_propagating=False),
    _spec("list_count_nonnull", [LIST], INT,
          lambda xs: len(_nonnull(xs)), null_propagating=False),
    _spec("percentile_rank", [LIST, NUMBER], FLOAT, _percentile_rank),
    # conversion
    _spec("to_number", [ANY], NUMBER, _to_number),
    _spec("to_date", [ANY], SemanticType.DATE.value, _to_date),
]}

# slice needs the evaluation context to flag truncation
CONTEXT_BUILTINS = {"slice"}
