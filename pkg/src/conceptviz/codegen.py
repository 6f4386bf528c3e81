"""Derivation candidate generation.

Builds prompts that describe a requested column derivation, obtains
completion texts from a pluggable backend (a deterministic offline rule
table or a remote OpenAI-compatible completion endpoint), and filters the
completions by parsing and sandboxed execution on sample values.  Completion
text never reaches any interpreter other than the formula evaluator.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field
from typing import Optional, Protocol, Sequence

from .evaluate import EvalError, eval_row
from .formula import Formula, FormulaError, parse_formula
from .values import SemanticType, Value, parse_scalar, render_text

CANDIDATES_PER_PROMPT = 5
MAX_SAMPLE_TUPLES = 3


class CodegenError(Exception):
    pass


class BackendUnavailable(CodegenError):
    def __init__(self, message: str, retryable: bool = True):
        super().__init__(message)
        self.retryable = retryable


@dataclass(frozen=True)
class RejectedCandidate:
    source_text: str
    reason: str


class AllCandidatesRejected(CodegenError):
    def __init__(self, rejections: Sequence[RejectedCandidate]):
        super().__init__(
            "no candidate survived filtering: "
            + "; ".join(f"{r.source_text!r}: {r.reason}" for r in rejections))
        self.rejections = tuple(rejections)


@dataclass(frozen=True)
class SourceSpec:
    name: str
    sem_type: SemanticType
    samples: tuple  # up to 3 example values

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples)[:3])


@dataclass(frozen=True)
class DerivationRequest:
    description: str
    sources: tuple
    target_name: str

    def __post_init__(self):
        object.__setattr__(self, "sources", tuple(self.sources))
        if not self.sources:
            raise ValueError("at least one source required")
        if not self.description.strip():
            raise ValueError("description must be non-empty")


@dataclass(frozen=True)
class CandidateFormula:
    formula: Formula
    source_text: str
    sample_outputs: tuple  # ((input values...), output) pairs
    origin: str  # remote | offline | user-edited


class GenerationBackend(Protocol):
    def complete(self, prompt: str, n: int) -> list[str]:
        """Return up to n completion texts (formula bodies)."""
        ...


# ---------------------------------------------------------------------------
# Prompt construction

_GRAMMAR_LINES = (
    "# formula language: fn(<params>) = <expression>; operators + - * / % "
    "== != < <= > >= and or not, if/then/else, let <x> = <e> in <e>, "
    "'text' literals",
    "# builtins: abs, round, floor, ceil, sqrt, pow, min, max, concat, "
    "upper, lower, trim, substring, split_part, text_length, to_text, year, "
    "month, day, weekday, list_len, list_get, slice, list_sum, list_avg, "
    "list_min, list_max, list_count_nonnull, percentile_rank, to_number, "
    "to_date",
)


def sanitize_identifier(name: str) -> str:
    """Lower-camel-case identifier from a free-form concept name."""
    words = re.findall(r"[A-Za-z0-9]+", name)
    if not words:
        return "p"
    head, *rest = words
    ident = head[:1].lower() + head[1:] if head else ""
    ident += "".join(w[:1].upper() + w[1:] for w in rest)
    if ident[0].isdigit():
        ident = "p" + ident
    return ident


def parameter_identifiers(names: Sequence[str]) -> list[str]:
    """Sanitized identifiers, made unique with numeric suffixes."""
    seen: dict[str, int] = {}
    out = []
    for name in names:
        ident = sanitize_identifier(name)
        if ident in seen:
            seen[ident] += 1
            ident = f"{ident}{seen[ident]}"
        seen.setdefault(ident, 1)
        out.append(ident)
    return out


def build_prompts(req: DerivationRequest) -> tuple[str, str]:
    """Simple and analytical prompt texts ending in a formula header."""
    idents = parameter_identifiers([s.name for s in req.sources])
    desc = " ".join(req.description.split())
    param_lines = []
    analytical_param_lines = []
    for src, ident in zip(req.sources, idents):
        examples = ", ".join(render_text(v) for v in src.samples)
        line = f"# @param {ident} examples: {examples}"
        param_lines.append(line)
        analytical_param_lines.append(line)
        analytical_param_lines.append(
            f"# @param {ident}_list: the list of all {ident}")
    simple = "\n".join([
        *_GRAMMAR_LINES,
        f"# {desc}",
        *param_lines,
        f"fn({', '.join(idents)}) =",
    ])
    analytical_params = idents + ["index"] + [f"{i}_list" for i in idents]
    analytical = "\n".join([
        *_GRAMMAR_LINES,
        f"# {desc}",
        *analytical_param_lines,
        f"fn({', '.join(analytical_params)}) =",
    ])
    return simple, analytical


# ---------------------------------------------------------------------------
# Offline backend: deterministic keyword rules over the prompt text

_DIFF_WORDS = {"diff", "difference", "minus", "subtract"}
_COMPARE_WORDS = {"warmer", "larger", "greater", "which"}
_AVG_WORDS = {"moving", "avg", "average"}
_CENTER_WORDS = {"center", "centered", "before", "after"}


@dataclass(frozen=True)
class _PromptShape:
    description: str
    params: tuple  # non-index, non-list identifiers
    header: str
    analytical: bool
    date_params: frozenset


def _parse_prompt(prompt: str) -> _PromptShape:
    lines = [ln for ln in prompt.splitlines() if ln.strip()]
    header = lines[-1]
    description = ""
    date_params = set()
    for ln in lines[:-1]:
        stripped = ln.lstrip("# ").strip()
        if ln.startswith("# @param"):
            m = re.match(r"#\s*@param\s+(\w+)\s+examples:\s*(.*)", ln)
            if m:
                first = m.group(2).split(",")[0].strip()
                if first and parse_scalar(first, SemanticType.DATE) is not None:
                    date_params.add(m.group(1))
            continue
        if stripped.startswith(("formula language", "builtins:")):
            continue
        if not description:
            description = stripped
    idents = re.findall(r"\w+", header.split("=", 1)[0])[1:]  # drop "fn"
    analytical = "index" in idents
    params = tuple(i for i in idents
                   if i != "index" and not i.endswith("_list"))
    return _PromptShape(description, params, header, analytical,
                        frozenset(date_params))


def _quote(s: str) -> str:
    return "'" + s.replace("'", "''") + "'"


def display_name(ident: str) -> str:
    """Reconstruct a space-separated display name from a camelCase ident."""
    words = re.findall(r"[A-Z]?[a-z]+|[A-Z]+(?![a-z])|\d+", ident)
    return " ".join(w[:1].upper() + w[1:] for w in words)


def offline_generate(prompt: str) -> list[str]:
    """Keyword-rule completions for the prompt's description line.

    Returns formula bodies; deterministic, no I/O.
    """
    shape = _parse_prompt(prompt)
    words = set(re.findall(r"[a-z0-9-]+", shape.description.lower()))
    out: list[str] = []

    if not shape.analytical:
        if len(shape.params) == 2 and words & _DIFF_WORDS:
            a, b = shape.params
            out.append(f"{a} - {b}")
            out.append(f"abs({a} - {b})")
        if len(shape.params) == 2 and words & _COMPARE_WORDS:
            a, b = shape.params
            out.append(
                f"if {a} > {b} then {_quote(display_name(a))} "
                f"else (if {b} > {a} then {_quote(display_name(b))} "
                f"else 'Same')")
        for fn in ("year", "month", "day"):
            if (fn in words and len(shape.params) == 1
                    and shape.params[0] in shape.date_params):
                out.append(f"{fn}({shape.params[0]})")
    else:
        window = re.search(r"(\d+)[\s-]*day", shape.description.lower())
        if window and words & _AVG_WORDS and len(shape.params) == 1:
            n = int(window.group(1))
            p = shape.params[0]
            trailing = (f"list_avg(slice({p}_list, index - {n - 1}, "
                        f"index + 1))")
            centered = (f"list_avg(slice({p}_list, index - {n // 2}, "
                        f"index + {(n + 1) // 2}))")
            if words & _CENTER_WORDS:
                out.extend([centered, trailing])
            else:
                out.append(trailing)
        if words & {"percentile", "rank"} and len(shape.params) == 1:
            p = shape.params[0]
            out.append(f"percentile_rank({p}_list, {p})")
    return out


class OfflineBackend:
    def complete(self, prompt: str, n: int) -> list[str]:
        return offline_generate(prompt)[:n]


# ---------------------------------------------------------------------------
# Remote backend: OpenAI-compatible completions endpoint

@dataclass(frozen=True)
class BackendConfig:
    kind: str = "offline"  # offline | remote
    endpoint: str = ""
    model: str = ""
    api_key_env: str = "CONCEPTVIZ_API_KEY"
    timeout_seconds: float = 30.0


class RemoteBackend:
    def __init__(self, config: BackendConfig):
        self.config = config

    def complete(self, prompt: str, n: int) -> list[str]:
        import httpx

        key = os.environ.get(self.config.api_key_env, "")
        if not key:
            raise BackendUnavailable(
                f"API key environment variable "
                f"{self.config.api_key_env!r} is not set", retryable=False)
        body = {
            "model": self.config.model,
            "prompt": prompt,
            "temperature": 0.3,
            "n": n,
            "stop": ["\n\n"],
        }
        try:
            resp = httpx.post(
                self.config.endpoint, json=body,
                headers={"Authorization": f"Bearer {key}"},
                timeout=self.config.timeout_seconds)
            resp.raise_for_status()
            payload = resp.json()
        except httpx.TimeoutException as exc:
            raise BackendUnavailable(f"backend timeout: {exc}") from exc
        except httpx.HTTPError as exc:
            raise BackendUnavailable(f"backend error: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise BackendUnavailable(
                f"malformed backend response: {exc}") from exc
        try:
            return [c["text"] for c in payload["choices"]]
        except (KeyError, TypeError) as exc:
            raise BackendUnavailable(
                f"unexpected backend response shape: {exc}") from exc


def make_backend(config: BackendConfig) -> GenerationBackend:
    if config.kind == "offline":
        return OfflineBackend()
    if config.kind == "remote":
        return RemoteBackend(config)
    raise ValueError(f"unknown backend kind {config.kind!r}")


# ---------------------------------------------------------------------------
# Filtering

def _sample_tuples(req: DerivationRequest) -> list[tuple]:
    count = min(MAX_SAMPLE_TUPLES, *(len(s.samples) for s in req.sources))
    return [tuple(s.samples[i] for s in req.sources) for i in range(count)]


def _try_candidate(req: DerivationRequest, source_text: str,
                   origin: str) -> CandidateFormula | RejectedCandidate:
    try:
        f = parse_formula(source_text,
                          [s.sem_type for s in req.sources])
    except FormulaError as exc:
        return RejectedCandidate(source_text,
                                 f"{type(exc).__name__}: {exc}")
    samples = _sample_tuples(req)
    lists = ([list(s.samples) for s in req.sources]
             if f.analytical else None)
    outputs = []
    for i, args in enumerate(samples):
        try:
            value = eval_row(f, list(args), index=i, lists=lists)
        except EvalError as exc:
            return RejectedCandidate(source_text, f"execution error: {exc}")
        outputs.append((args, value))
    if samples and all(v is None for _, v in outputs):
        return RejectedCandidate(source_text, "null output on every sample")
    return CandidateFormula(f, source_text, tuple(outputs), origin)


def filter_candidate(req: DerivationRequest, source_text: str,
                     origin: str = "user-edited") -> CandidateFormula:
    """Re-admit a (possibly edited) formula text through the same filter."""
    result = _try_candidate(req, source_text, origin)
    if isinstance(result, RejectedCandidate):
        raise AllCandidatesRejected([result])
    return result


def generate_candidates(req: DerivationRequest,
                        backend: GenerationBackend) -> list[CandidateFormula]:
    """Prompt the backend twice and keep completions that execute cleanly.

    Simple-prompt survivors come first; duplicates (identical sample-output
    vectors) keep only their first occurrence.
    """
    simple_prompt, analytical_prompt = build_prompts(req)
    origin = "offline" if isinstance(backend, OfflineBackend) else "remote"
    accepted: list[CandidateFormula] = []
    rejections: list[RejectedCandidate] = []
    seen_outputs: set = set()
    for prompt in (simple_prompt, analytical_prompt):
        header = prompt.splitlines()[-1]
        for completion in backend.complete(prompt, CANDIDATES_PER_PROMPT):
            text = completion.strip()
            if not text:
                continue
            source = text if text.startswith("fn(") else f"{header} {text}"
            result = _try_candidate(req, source, origin)
            if isinstance(result, RejectedCandidate):
                rejections.append(result)
                continue
            fingerprint = tuple(render_text(v) if v is not None else None
                                for _, v in result.sample_outputs)
            if fingerprint in seen_outputs:
                continue
            seen_outputs.add(fingerprint)
            accepted.append(result)
    if not accepted:
        raise AllCandidatesRejected(rejections)
    return accepted
