"""The sandboxed column-derivation expression language.

Concrete syntax::

    fn(seattleTemp, atlantaTemp) = seattleTemp - atlantaTemp
    fn(t, index, t_list) = list_avg(slice(t_list, index - 3, index + 4))

A formula is a header naming its parameters followed by one expression.
Declaring ``index`` in the header makes the formula *analytical*: evaluation
also receives the row index and one full-column list per parameter (named
``<param>_list``). ``#`` starts a line comment; text literals use single
quotes with a doubled quote as the escape.

The language has no loops, no recursion and no user-defined functions, so
every evaluation terminates structurally.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

from .builtins import BUILTINS, BuiltinSpec
from .values import SemanticType


class FormulaError(Exception):
    pass


class ParseError(FormulaError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at offset {position})")
        self.position = position


class UnknownIdentifier(FormulaError):
    pass


class FormulaTypeError(FormulaError):
    pass


class ArityError(FormulaError):
    pass


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Literal:
    value: object


@dataclass(frozen=True)
class ParamRef:
    name: str


@dataclass(frozen=True)
class IndexRef:
    pass


@dataclass(frozen=True)
class ListRef:
    param: str


@dataclass(frozen=True)
class Unary:
    op: str  # "-" | "not"
    operand: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class If:
    cond: "Expr"
    then: "Expr"
    otherwise: "Expr"


@dataclass(frozen=True)
class Call:
    fn: str
    args: tuple


@dataclass(frozen=True)
class Let:
    name: str
    value: "Expr"
    body: "Expr"


@dataclass(frozen=True)
class LetRef:
    name: str


Expr = Union[Literal, ParamRef, IndexRef, ListRef, Unary, Binary, If, Call,
             Let, LetRef]


@dataclass(frozen=True)
class Formula:
    params: tuple  # ((name, SemanticType | None), ...)
    analytical: bool
    body: Expr
    source: str

    @property
    def param_names(self) -> list[str]:
        return [n for n, _ in self.params]


# ---------------------------------------------------------------------------
# Lexer

_TOKEN_RE = re.compile(r"""
      (?P<ws>\s+|\#[^\n]*)
    | (?P<number>\d+\.\d*([eE][+-]?\d+)?|\.\d+([eE][+-]?\d+)?|\d+([eE][+-]?\d+)?)
    | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
    | (?P<string>'(?:[^']|'')*')
    | (?P<op>==|!=|<=|>=|[-+*/%<>=(),])
""", re.VERBOSE)

KEYWORDS = {"if", "then", "else", "let", "in", "and", "or", "not",
            "true", "false", "null", "fn"}


@dataclass
class Token:
    kind: str
    text: str
    pos: int


def _tokenize(source: str) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if not m:
            raise ParseError(f"unexpected character {source[pos]!r}", pos)
        pos = m.end()
        kind = m.lastgroup
        if kind == "ws":
            continue
        text = m.group()
        if kind == "ident" and text in KEYWORDS:
            kind = text
        tokens.append(Token(kind, text, m.start()))
    tokens.append(Token("eof", "", len(source)))
    return tokens


# ---------------------------------------------------------------------------
# Parser


class _Parser:
    def __init__(self, tokens: list[Token], source: str):
        self.tokens = tokens
        self.i = 0
        self.source = source

    @property
    def cur(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        tok = self.cur
        self.i += 1
        return tok

    def expect(self, kind: str, what: str = "") -> Token:
        if self.cur.kind != kind:
            raise ParseError(
                f"expected {what or kind}, found {self.cur.text or 'end of input'!r}",
                self.cur.pos)
        return self.advance()

    def expect_op(self, text: str) -> Token:
        if self.cur.kind != "op" or self.cur.text != text:
            raise ParseError(
                f"expected {text!r}, found {self.cur.text or 'end of input'!r}",
                self.cur.pos)
        return self.advance()

    def parse_formula(self):
        self.expect("fn", "'fn'")
        self.expect_op("(")
        header = []
        if self.cur.kind == "ident":
            header.append(self.advance().text)
            while self.cur.kind == "op" and self.cur.text == ",":
                self.advance()
                header.append(self.expect("ident", "parameter name").text)
        self.expect_op(")")
        self.expect_op("=")
        body = self.parse_expr()
        self.expect("eof", "end of formula")
        return header, body

    def parse_expr(self) -> Expr:
        if self.cur.kind == "let":
            self.advance()
            name = self.expect("ident", "let-bound name").text
            self.expect_op("=")
            value = self.parse_expr()
            self.expect("in", "'in'")
            body = self.parse_expr()
            return Let(name, value, body)
        if self.cur.kind == "if":
            self.advance()
            cond = self.parse_expr()
            self.expect("then", "'then'")
            then = self.parse_expr()
            self.expect("else", "'else'")
            otherwise = self.parse_expr()
            return If(cond, then, otherwise)
        return self.parse_or()

    def parse_or(self) -> Expr:
        left = self.parse_and()
        while self.cur.kind == "or":
            self.advance()
            left = Binary("or", left, self.parse_and())
        return left

    def parse_and(self) -> Expr:
        left = self.parse_cmp()
        while self.cur.kind == "and":
            self.advance()
            left = Binary("and", left, self.parse_cmp())
        return left

    def parse_cmp(self) -> Expr:
        left = self.parse_add()
        if self.cur.kind == "op" and self.cur.text in (
                "==", "!=", "<", "<=", ">", ">="):
            op = self.advance().text
            return Binary(op, left, self.parse_add())
        return left

    def parse_add(self) -> Expr:
        left = self.parse_mul()
        while self.cur.kind == "op" and self.cur.text in ("+", "-"):
            op = self.advance().text
            left = Binary(op, left, self.parse_mul())
        return left

    def parse_mul(self) -> Expr:
        left = self.parse_unary()
        while self.cur.kind == "op" and self.cur.text in ("*", "/", "%"):
            op = self.advance().text
            left = Binary(op, left, self.parse_unary())
        return left

    def parse_unary(self) -> Expr:
        if self.cur.kind == "op" and self.cur.text == "-":
            self.advance()
            return Unary("-", self.parse_unary())
        if self.cur.kind == "not":
            self.advance()
            return Unary("not", self.parse_unary())
        return self.parse_primary()

    def parse_primary(self) -> Expr:
        tok = self.cur
        if tok.kind == "number":
            self.advance()
            text = tok.text
            if "." in text or "e" in text or "E" in text:
                return Literal(float(text))
            return Literal(int(text))
        if tok.kind == "string":
            self.advance()
            return Literal(tok.text[1:-1].replace("''", "'"))
        if tok.kind == "true":
            self.advance()
            return Literal(True)
        if tok.kind == "false":
            self.advance()
            return Literal(False)
        if tok.kind == "null":
            self.advance()
            return Literal(None)
        if tok.kind == "ident":
            self.advance()
            if self.cur.kind == "op" and self.cur.text == "(":
                self.advance()
                args = []
                if not (self.cur.kind == "op" and self.cur.text == ")"):
                    args.append(self.parse_expr())
                    while self.cur.kind == "op" and self.cur.text == ",":
                        self.advance()
                        args.append(self.parse_expr())
                self.expect_op(")")
                return Call(tok.text, tuple(args))
            return LetRef(tok.text)  # resolved to param/index/list/let later
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            inner = self.parse_expr()
            self.expect_op(")")
            return inner
        raise ParseError(
            f"expected an expression, found {tok.text or 'end of input'!r}",
            tok.pos)


# ---------------------------------------------------------------------------
# Resolution and type checking


def _resolve(expr: Expr, params: list[str], analytical: bool,
             let_names: frozenset = frozenset()) -> Expr:
    if isinstance(expr, LetRef):
        name = expr.name
        if name in let_names:
            return expr
        if name in params:
            return ParamRef(name)
        if analytical and name == "index":
            return IndexRef()
        if analytical and name.endswith("_list") and name[:-5] in params:
            return ListRef(name[:-5])
        raise UnknownIdentifier(f"unknown identifier {name!r}")
    if isinstance(expr, Unary):
        return Unary(expr.op, _resolve(expr.operand, params, analytical, let_names))
    if isinstance(expr, Binary):
        return Binary(expr.op,
                      _resolve(expr.left, params, analytical, let_names),
                      _resolve(expr.right, params, analytical, let_names))
    if isinstance(expr, If):
        return If(_resolve(expr.cond, params, analytical, let_names),
                  _resolve(expr.then, params, analytical, let_names),
                  _resolve(expr.otherwise, params, analytical, let_names))
    if isinstance(expr, Call):
        if expr.fn not in BUILTINS:
            raise UnknownIdentifier(f"unknown function {expr.fn!r}")
        expected = len(BUILTINS[expr.fn].arg_types)
        if len(expr.args) != expected:
            raise ArityError(
                f"{expr.fn} takes {expected} argument(s), got {len(expr.args)}")
        return Call(expr.fn, tuple(
            _resolve(a, params, analytical, let_names) for a in expr.args))
    if isinstance(expr, Let):
        return Let(expr.name,
                   _resolve(expr.value, params, analytical, let_names),
                   _resolve(expr.body, params, analytical,
                            let_names | {expr.name}))
    return expr


# Type lattice labels for the checker: semantic type values plus
# "number" (int|float), "list", "null", "any".
NUMBER = "number"
ANY = "any"
LIST = "list"
NULL = "null"


def _is_number(t) -> bool:
    return t in (NUMBER, SemanticType.INTEGER.value, SemanticType.FLOAT.value)


def _compatible(actual, expected) -> bool:
    if expected == ANY or actual in (ANY, NULL):
        return True
    if expected == NUMBER:
        return _is_number(actual)
    if expected == "temporal":
        return actual in (SemanticType.DATE.value, SemanticType.DATETIME.value)
    if expected == SemanticType.FLOAT.value:
        return _is_number(actual)
    return actual == expected


def _check(expr: Expr, env: dict) -> str:
    """Returns the checker type label of the expression."""
    if isinstance(expr, Literal):
        v = expr.value
        if v is None:
            return NULL
        if isinstance(v, bool):
            return SemanticType.BOOLEAN.value
        if isinstance(v, int):
            return SemanticType.INTEGER.value
        if isinstance(v, float):
            return SemanticType.FLOAT.value
        return SemanticType.TEXT.value
    if isinstance(expr, ParamRef):
        return env[expr.name]
    if isinstance(expr, IndexRef):
        return SemanticType.INTEGER.value
    if isinstance(expr, ListRef):
        return LIST
    if isinstance(expr, LetRef):
        return env[("let", expr.name)]
    if isinstance(expr, Let):
        t = _check(expr.value, env)
        return _check(expr.body, {**env, ("let", expr.name): t})
    if isinstance(expr, Unary):
        t = _check(expr.operand, env)
        if expr.op == "-":
            if not _compatible(t, NUMBER):
                raise FormulaTypeError(f"unary '-' needs a number, got {t}")
            return t if t != ANY else NUMBER
        if not _compatible(t, SemanticType.BOOLEAN.value):
            raise FormulaTypeError(f"'not' needs a boolean, got {t}")
        return SemanticType.BOOLEAN.value
    if isinstance(expr, Binary):
        lt = _check(expr.left, env)
        rt = _check(expr.right, env)
        op = expr.op
        if op in ("+", "-", "*", "/", "%"):
            for t in (lt, rt):
                if not _compatible(t, NUMBER):
                    raise FormulaTypeError(f"'{op}' needs numbers, got {t}")
            if op == "/":
                return SemanticType.FLOAT.value
            if SemanticType.FLOAT.value in (lt, rt):
                return SemanticType.FLOAT.value
            if lt == rt == SemanticType.INTEGER.value:
                return SemanticType.INTEGER.value
            return NUMBER
        if op in ("and", "or"):
            for t in (lt, rt):
                if not _compatible(t, SemanticType.BOOLEAN.value):
                    raise FormulaTypeError(f"'{op}' needs booleans, got {t}")
            return SemanticType.BOOLEAN.value
        # comparisons: both sides must be mutually comparable
        if not (_compatible(lt, rt) or _compatible(rt, lt)
                or (_is_number(lt) and _is_number(rt))):
            raise FormulaTypeError(f"cannot compare {lt} with {rt}")
        return SemanticType.BOOLEAN.value
    if isinstance(expr, If):
        ct = _check(expr.cond, env)
        if not _compatible(ct, SemanticType.BOOLEAN.value):
            raise FormulaTypeError(f"'if' condition must be boolean, got {ct}")
        tt = _check(expr.then, env)
        et = _check(expr.otherwise, env)
        if tt == et:
            return tt
        if _is_number(tt) and _is_number(et):
            return NUMBER
        if NULL in (tt, et):
            return et if tt == NULL else tt
        return ANY
    if isinstance(expr, Call):
        spec: BuiltinSpec = BUILTINS[expr.fn]
        if len(expr.args) != len(spec.arg_types):
            raise ArityError(
                f"{expr.fn} takes {len(spec.arg_types)} argument(s), "
                f"got {len(expr.args)}")
        for arg, expected in zip(expr.args, spec.arg_types):
            actual = _check(arg, env)
            if not _compatible(actual, expected):
                raise FormulaTypeError(
                    f"{expr.fn} argument expects {expected}, got {actual}")
        return spec.return_type
    raise FormulaTypeError(f"unexpected node {expr!r}")


def parse_formula(source: str,
                  param_types: Optional[Sequence[SemanticType]] = None) -> Formula:
    """Parse, resolve and (when parameter types are supplied) type-check."""
    tokens = _tokenize(source)
    header, raw_body = _Parser(tokens, source).parse_formula()

    analytical = "index" in header
    params = [h for h in header if h != "index" and not h.endswith("_list")]
    if not params:
        raise ParseError("formula declares no parameters", 0)
    for h in header:
        if h.endswith("_list") and h[:-5] not in params:
            raise ParseError(f"list parameter {h!r} has no matching parameter", 0)
        if h.endswith("_list") and not analytical:
            raise ParseError("list parameters require 'index' in the header", 0)

    body = _resolve(raw_body, params, analytical)

    typed_params: list[tuple[str, Optional[SemanticType]]] = []
    if param_types is not None:
        if len(param_types) != len(params):
            raise ArityError(
                f"formula has {len(params)} parameter(s), "
                f"got {len(param_types)} type(s)")
        typed_params = list(zip(params, param_types))
        env = {n: t.value for n, t in typed_params}
        _check(body, env)
    else:
        typed_params = [(n, None) for n in params]

    return Formula(params=tuple(typed_params), analytical=analytical,
                   body=body, source=source)
