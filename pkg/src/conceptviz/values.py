"""Cell value model, semantic types, and the type-inference ladder.

Cell values are plain Python objects: ``None``, ``bool``, ``int``, ``float``,
``str``, ``datetime.date``, and ``datetime.datetime``. Equality between cells
is *canonical*: integers and floats compare numerically (5 == 5.0), and text
comparison ignores surrounding whitespace.
"""

from __future__ import annotations

import datetime as dt
import re
from enum import Enum
from typing import Any, Iterable, Optional

Value = Any  # None | bool | int | float | str | dt.date | dt.datetime

_NULL_TOKENS = {"", "null", "na"}

_INT_RE = re.compile(r"[+-]?\d+")
_FLOAT_RE = re.compile(r"[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?")
_ISO_DATE_RE = re.compile(r"\d{4}-\d{2}-\d{2}")
_US_DATE_RE = re.compile(r"\d{1,2}/\d{1,2}/\d{4}")
_DATETIME_RE = re.compile(r"\d{4}-\d{2}-\d{2}[T ]\d{2}:\d{2}(:\d{2})?")


class SemanticType(str, Enum):
    """Column types, ordered from most to least specific on the inference ladder."""

    BOOLEAN = "boolean"
    INTEGER = "integer"
    FLOAT = "float"
    DATE = "date"
    DATETIME = "datetime"
    TEXT = "text"


# Most specific first; inference walks this and stops at the first type that
# accepts every non-null value. Text accepts everything.
LADDER = [
    SemanticType.BOOLEAN,
    SemanticType.INTEGER,
    SemanticType.FLOAT,
    SemanticType.DATE,
    SemanticType.DATETIME,
    SemanticType.TEXT,
]


def is_null_token(raw: str) -> bool:
    return raw.strip().lower() in _NULL_TOKENS


def parse_scalar(raw: str, sem_type: SemanticType) -> Optional[Value]:
    """Parse raw text as the given type; None if it does not conform.

    Null tokens (empty string, "null", "NA", case-insensitive) are handled by
    the caller; this function only deals with substantive values.
    """
    s = raw.strip()
    if sem_type is SemanticType.BOOLEAN:
        low = s.lower()
        if low == "true":
            return True
        if low == "false":
            return False
        return None
    if sem_type is SemanticType.INTEGER:
        return int(s) if _INT_RE.fullmatch(s) else None
    if sem_type is SemanticType.FLOAT:
        return float(s) if _FLOAT_RE.fullmatch(s) else None
    if sem_type is SemanticType.DATE:
        if _ISO_DATE_RE.fullmatch(s):
            try:
                return dt.date.fromisoformat(s)
            except ValueError:
                return None
        if _US_DATE_RE.fullmatch(s):
            try:
                return dt.datetime.strptime(s, "%m/%d/%Y").date()
            except ValueError:
                return None
        return None
    if sem_type is SemanticType.DATETIME:
        if not _DATETIME_RE.fullmatch(s):
            return None
        for fmt in ("%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S",
                    "%Y-%m-%d %H:%M", "%Y-%m-%dT%H:%M"):
            try:
                return dt.datetime.strptime(s, fmt)
            except ValueError:
                continue
        return None
    return raw  # text keeps the original rendering, untrimmed


def infer_type(values: Iterable[str]) -> SemanticType:
    """Most specific ladder type accepting every non-null raw value.

    Empty evidence (no values, or all null tokens) falls back to text.
    """
    evidence = [v for v in values if not is_null_token(v)]
    if not evidence:
        return SemanticType.TEXT
    for sem_type in LADDER[:-1]:
        if all(parse_scalar(v, sem_type) is not None for v in evidence):
            return sem_type
    return SemanticType.TEXT


def infer_type_of_values(values: Iterable[Value]) -> SemanticType:
    """Infer a semantic type from already-parsed cell values."""
    return infer_type([render_text(v) for v in values if v is not None])


def render_text(v: Value) -> str:
    """Canonical text rendering of a value (used for CSV cells, tokens, names)."""
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(int(v)) if v.is_integer() else repr(v)
    if isinstance(v, dt.datetime):
        return v.isoformat(sep=" ")
    if isinstance(v, dt.date):
        return v.isoformat()
    return str(v)


def canonical_key(v: Value):
    """Hashable key under which canonically-equal values collide.

    Integer k and Float k.0 share a key; text is compared trimmed.
    """
    if v is None:
        return None
    if isinstance(v, bool):
        return ("bool", v)
    if isinstance(v, (int, float)):
        return ("num", float(v))
    if isinstance(v, dt.datetime):
        return ("datetime", v)
    if isinstance(v, dt.date):
        return ("date", v)
    return ("text", str(v).strip())


def values_equal(a: Value, b: Value) -> bool:
    return canonical_key(a) == canonical_key(b)


def type_of_value(v: Value) -> SemanticType:
    if isinstance(v, bool):
        return SemanticType.BOOLEAN
    if isinstance(v, int):
        return SemanticType.INTEGER
    if isinstance(v, float):
        return SemanticType.FLOAT
    if isinstance(v, dt.datetime):
        return SemanticType.DATETIME
    if isinstance(v, dt.date):
        return SemanticType.DATE
    return SemanticType.TEXT


def representable_in(v: Value, sem_type: SemanticType) -> bool:
    """Whether a non-null cell may live in a column of the given type."""
    if v is None:
        return True
    actual = type_of_value(v)
    if actual == sem_type:
        return True
    if sem_type is SemanticType.FLOAT and actual is SemanticType.INTEGER:
        return True
    if sem_type is SemanticType.DATETIME and actual is SemanticType.DATE:
        return True
    return sem_type is SemanticType.TEXT and actual is SemanticType.TEXT


def unify_types(types: Iterable[SemanticType]) -> SemanticType:
    """Join of column types: the least ladder type able to host all cells.

    Integer joins float to float, date joins datetime to datetime; any other
    mixture falls back to text (cells get re-rendered as text by callers).
    """
    seen = set(types)
    if len(seen) == 1:
        return seen.pop()
    if seen <= {SemanticType.INTEGER, SemanticType.FLOAT}:
        return SemanticType.FLOAT
    if seen <= {SemanticType.DATE, SemanticType.DATETIME}:
        return SemanticType.DATETIME
    return SemanticType.TEXT
