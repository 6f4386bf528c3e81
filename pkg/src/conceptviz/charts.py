"""Chart templates and Vega-Lite document assembly.

Each template is a mark skeleton plus channel slots; assembly fills the
slots from concept encodings and embeds the formulated table as inline
data.  Documents validate offline against a pinned copy of the Vega-Lite
v5 schema.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Optional, Sequence

import jsonschema

from .concepts import DataConcept
from .table import Table, table_to_records
from .values import SemanticType

CHANNELS = ("x", "y", "x2", "y2", "color", "size", "column", "row")
AGGREGATES = ("count", "sum", "avg", "median", "min", "max")
_AGGREGATE_TO_VEGA = {"avg": "mean"}

SCHEMA_URL = "https://vega.github.io/schema/vega-lite/v5.json"


class ChartError(Exception):
    pass


class MissingRequiredChannel(ChartError):
    pass


class UnknownChannel(ChartError):
    pass


class UnknownConceptInEncoding(ChartError):
    pass


class AggregateOnNonQuantitative(ChartError):
    pass


class InvalidTemplate(ChartError):
    pass


class SchemaValidationError(ChartError):
    pass


@dataclass(frozen=True)
class ChannelSpec:
    name: str
    required: bool = False


@dataclass(frozen=True)
class ChartTemplate:
    id: str
    mark: object  # mark name or mark definition object
    channels: tuple
    fixed_encoding: dict | None = None  # channels the template locks
    custom_doc: str | None = None  # placeholder document for custom marks

    def channel(self, name: str) -> Optional[ChannelSpec]:
        for ch in self.channels:
            if ch.name == name:
                return ch
        return None


@dataclass(frozen=True)
class Encoding:
    channel: str
    concept: Optional[DataConcept] = None  # None only with aggregate=count
    aggregate: Optional[str] = None
    type_override: Optional[str] = None


def _t(template_id, mark, required, optional=(), fixed=None):
    channels = tuple(
        [ChannelSpec(n, required=True) for n in required]
        + [ChannelSpec(n) for n in optional])
    return ChartTemplate(template_id, mark, channels, fixed_encoding=fixed)


BUILTIN_TEMPLATES: tuple = (
    _t("scatter", "circle", ["x", "y"], ["color", "size", "column", "row"]),
    _t("bubble", "circle", ["x", "y", "size"], ["color"]),
    _t("ranged-dot", "rule", ["x", "y", "y2"], ["color"]),
    _t("bar", "bar", ["x", "y"], ["color", "column", "row"]),
    _t("stacked-bar", "bar", ["x", "y", "color"], ["column"]),
    _t("layered-bar", {"type": "bar", "opacity": 0.7}, ["x", "y", "color"],
       [], fixed={"y": {"stack": None}}),
    _t("grouped-bar", "bar", ["x", "y", "color", "column"], []),
    _t("histogram", "bar", ["x"], ["color"],
       fixed={"y": {"aggregate": "count", "type": "quantitative"}}),
    _t("line", "line", ["x", "y"], ["color"]),
    _t("line-with-dots", {"type": "line", "point": True}, ["x", "y"],
       ["color"]),
    _t("heatmap", "rect", ["x", "y", "color"], []),
    ChartTemplate("custom", "point",
                  tuple(ChannelSpec(n) for n in CHANNELS)),
)


def list_templates() -> list[ChartTemplate]:
    return list(BUILTIN_TEMPLATES)


def get_template(template_id: str,
                 extra: Sequence[ChartTemplate] = ()) -> ChartTemplate:
    for t in list(extra) + list(BUILTIN_TEMPLATES):
        if t.id == template_id:
            return t
    raise UnknownChannel(f"no template with id {template_id!r}")


_PLACEHOLDER = re.compile(r"\{\{channel:([a-z0-9]+)\}\}")


def register_custom_template(template_id: str, doc: str) -> ChartTemplate:
    """Template from a Vega-Lite document with {{channel:<name>}} tokens."""
    names = _PLACEHOLDER.findall(doc)
    if not names:
        raise InvalidTemplate("document contains no channel placeholders")
    for name in names:
        if name not in CHANNELS:
            raise InvalidTemplate(f"unsupported channel name {name!r}")
    try:
        json.loads(_PLACEHOLDER.sub("f", doc))
    except json.JSONDecodeError as exc:
        raise InvalidTemplate(f"document is not valid JSON: {exc}")
    channels = tuple(ChannelSpec(n, required=True)
                     for n in dict.fromkeys(names))
    return ChartTemplate(template_id, "point", channels, custom_doc=doc)


def infer_channel_type(sem_type: SemanticType) -> str:
    if sem_type in (SemanticType.DATE, SemanticType.DATETIME):
        return "temporal"
    if sem_type in (SemanticType.INTEGER, SemanticType.FLOAT):
        return "quantitative"
    return "nominal"


def _field_of(enc: Encoding, t: Table) -> str:
    c = enc.concept
    if c is None or not c.known:
        raise UnknownConceptInEncoding(
            f"channel {enc.channel}: concept is not bound to a column")
    field = c.resolution.column
    if field not in t.column_names:
        raise UnknownConceptInEncoding(
            f"channel {enc.channel}: column {field!r} not in table "
            f"{t.name!r}")
    return field


def _encoding_entry(enc: Encoding, t: Table) -> dict:
    if enc.aggregate == "count":
        return {"aggregate": "count", "type": "quantitative"}
    field = _field_of(enc, t)
    sem = t.columns[t.column_index(field)].sem_type
    ch_type = enc.type_override or infer_channel_type(sem)
    entry: dict = {"field": field}
    if enc.aggregate:
        if ch_type != "quantitative":
            raise AggregateOnNonQuantitative(
                f"aggregate {enc.aggregate!r} on {ch_type} field {field!r}")
        entry["aggregate"] = _AGGREGATE_TO_VEGA.get(enc.aggregate,
                                                    enc.aggregate)
    # color keeps the paper's shape: nominal color carries no "type" key
    if not (enc.channel == "color" and ch_type == "nominal"):
        entry["type"] = ch_type
    return entry


def assemble_spec(template: ChartTemplate, encodings: Sequence[Encoding],
                  t: Table) -> dict:
    by_channel = {}
    for enc in encodings:
        if template.channel(enc.channel) is None:
            raise UnknownChannel(
                f"template {template.id!r} has no channel {enc.channel!r}")
        by_channel[enc.channel] = enc
    fixed = template.fixed_encoding or {}
    for ch in template.channels:
        if ch.required and ch.name not in by_channel and ch.name not in fixed:
            raise MissingRequiredChannel(
                f"template {template.id!r} requires channel {ch.name!r}")

    if template.custom_doc is not None:
        return _assemble_custom(template, by_channel, t)

    encoding: dict = {}
    for name, enc in by_channel.items():
        entry = _encoding_entry(enc, t)
        if template.id == "histogram" and name == "x" \
                and entry.get("type") == "quantitative":
            entry["bin"] = True
        entry.update(fixed.get(name, {}))
        encoding[name] = entry
    for name, locked in fixed.items():
        if name not in encoding:
            encoding[name] = dict(locked)

    return {
        "$schema": SCHEMA_URL,
        "mark": template.mark,
        "encoding": encoding,
        "data": {"values": table_to_records(t)},
    }


def _assemble_custom(template: ChartTemplate, by_channel: dict,
                     t: Table) -> dict:
    def substitute(m):
        return _field_of(by_channel[m.group(1)], t)

    doc = json.loads(_PLACEHOLDER.sub(substitute, template.custom_doc))
    doc.setdefault("$schema", SCHEMA_URL)
    doc["data"] = {"values": table_to_records(t)}
    return doc


@lru_cache(maxsize=1)
def _validator() -> jsonschema.Draft7Validator:
    text = resources.files("conceptviz.data") \
        .joinpath("vega-lite-v5-schema.json").read_text()
    return jsonschema.Draft7Validator(json.loads(text))


def validate_spec(doc: dict):
    """Raise SchemaValidationError unless doc matches the pinned v5 schema."""
    errors = sorted(_validator().iter_errors(doc), key=lambda e: e.json_path)
    if errors:
        raise SchemaValidationError(
            "; ".join(e.message for e in errors[:3]))
