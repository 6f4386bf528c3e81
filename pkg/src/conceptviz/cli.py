"""Command-line interface.

Subcommands:
  synth      rank reshaping programs that explain an example relation
  derive     append a derived column described in natural language
  formulate  run the full pipeline from a session file and a chart request
  serve      start the HTTP service

Exit codes: 0 = at least one result; 1 = I/O, argument, or backend errors;
2 = no reshaping program exists (diagnostic printed).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import codegen
from .evaluate import DerivationError, apply_derivation
from .formula import FormulaError
from .reshape import eval_program
from .session import (
    EncodingRequest,
    NeedsExampleRelation,
    Session,
)
from .synthesis import (
    ExampleRelation,
    NoProgram,
    SynthesisLimits,
    synthesize,
)
from .table import Table, TableError, parse_table, serialize_table

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NO_PROGRAM = 2


class CliError(Exception):
    pass


def _read_table(path: str, name: str | None = None) -> Table:
    p = Path(path)
    try:
        data = p.read_bytes()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}")
    fmt = "json-rows" if p.suffix.lower() == ".json" else "csv"
    try:
        return parse_table(data, fmt, name or p.stem)
    except TableError as exc:
        raise CliError(f"cannot parse {path}: {exc}")


def _example_from_table(t: Table) -> ExampleRelation:
    return ExampleRelation(tuple(t.column_names), t.rows)


def _backend_config(args) -> codegen.BackendConfig:
    if getattr(args, "config", None):
        try:
            doc = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read config {args.config}: {exc}")
        config = codegen.BackendConfig(
            kind=doc.get("kind", "offline"),
            endpoint=doc.get("endpoint", ""),
            model=doc.get("model", ""),
            api_key_env=doc.get("api_key_env", "CONCEPTVIZ_API_KEY"),
            timeout_seconds=doc.get("timeout_seconds", 30.0))
    else:
        config = codegen.BackendConfig()
    if getattr(args, "backend", None):
        config = codegen.BackendConfig(
            kind=args.backend, endpoint=config.endpoint,
            model=config.model, api_key_env=config.api_key_env,
            timeout_seconds=config.timeout_seconds)
    return config


# ---------------------------------------------------------------------------
# synth

def cmd_synth(args) -> int:
    table = _read_table(args.table)
    example = _example_from_table(_read_table(args.example))
    limits = SynthesisLimits(max_depth=args.max_depth)
    try:
        results = synthesize(table, example, limits)
    except NoProgram as exc:
        if args.json:
            print(json.dumps({"results": [],
                              "diagnostic": exc.diagnostic.describe()}))
        else:
            print("no program found", file=sys.stderr)
            print(exc.diagnostic.describe(), file=sys.stderr)
        return EXIT_NO_PROGRAM
    if args.json:
        out = []
        for r in results:
            t = eval_program(r.program, table)
            out.append({
                "program": r.program_text,
                "binding": r.column_binding,
                "columns": t.column_names,
                "preview": [list(map(str, row)) for row in t.rows[:10]],
            })
        print(json.dumps({"results": out}, indent=2))
    else:
        for i, r in enumerate(results, 1):
            t = eval_program(r.program, table)
            print(f"[{i}] {r.program_text}")
            print(f"    binding: {r.column_binding}")
            print(f"    columns: {', '.join(t.column_names)}")
            for row in t.rows[:10]:
                print("    " + " | ".join("" if v is None else str(v)
                                          for v in row))
    return EXIT_OK


# ---------------------------------------------------------------------------
# derive

def cmd_derive(args) -> int:
    table = _read_table(args.table)
    source_names = [s.strip() for s in args.sources.split(",") if s.strip()]
    for name in source_names:
        if name not in table.column_names:
            raise CliError(f"unknown column {name!r}")
    sources = []
    for name in source_names:
        values = [v for v in table.column_values(name) if v is not None]
        sem = table.columns[table.column_index(name)].sem_type
        sources.append(codegen.SourceSpec(name, sem, tuple(values[:3])))
    req = codegen.DerivationRequest(
        description=args.desc, sources=tuple(sources),
        target_name=args.out)
    backend = codegen.make_backend(_backend_config(args))
    try:
        candidates = codegen.generate_candidates(req, backend)
    except codegen.BackendUnavailable as exc:
        raise CliError(f"backend unavailable: {exc}")
    except codegen.AllCandidatesRejected as exc:
        raise CliError(str(exc))
    if args.show_candidates:
        for i, c in enumerate(candidates):
            print(f"[{i}] {c.source_text}")
            for inputs, output in c.sample_outputs:
                rendered = ", ".join(str(v) for v in inputs)
                print(f"    ({rendered}) -> {output}")
        return EXIT_OK
    if not 0 <= args.pick < len(candidates):
        raise CliError(
            f"--pick {args.pick} out of range "
            f"({len(candidates)} candidate(s))")
    chosen = candidates[args.pick]
    try:
        extended = apply_derivation(table, chosen.formula, source_names,
                                    args.out)
    except (DerivationError, FormulaError) as exc:
        raise CliError(f"cannot apply candidate: {exc}")
    sys.stdout.write(serialize_table(extended, "csv").decode("utf-8"))
    return EXIT_OK


# ---------------------------------------------------------------------------
# formulate

def cmd_formulate(args) -> int:
    try:
        session = Session.from_dict(
            json.loads(Path(args.session).read_text()))
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise CliError(f"cannot load session {args.session}: {exc}")
    try:
        chart_req = json.loads(Path(args.chart).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot load chart request {args.chart}: {exc}")

    encodings = []
    for e in chart_req.get("encodings", []):
        concept_id = e.get("concept_id")
        if concept_id is None and e.get("concept_name"):
            concept = session.shelf.by_name(e["concept_name"])
            if concept is None:
                raise CliError(f"unknown concept {e['concept_name']!r}")
            concept_id = concept.id
        encodings.append(EncodingRequest(e["channel"], concept_id,
                                         e.get("aggregate")))

    try:
        outcome = session.formulate(chart_req["template_id"], encodings)
    except Exception as exc:
        raise CliError(f"formulate failed: {exc}")
    if isinstance(outcome, NeedsExampleRelation):
        if not args.example:
            raise CliError(
                "the encodings use unknown concepts; pass --example <csv> "
                f"with columns: {', '.join(outcome.columns)}")
        example_table = _read_table(args.example)
        if tuple(example_table.column_names) != tuple(outcome.columns):
            raise CliError(
                f"example columns {example_table.column_names} do not "
                f"match {list(outcome.columns)}")
        try:
            outcome = session.complete_formulate(
                outcome.pending, _example_from_table(example_table))
        except NoProgram as exc:
            print("no program found", file=sys.stderr)
            print(exc.diagnostic.describe(), file=sys.stderr)
            return EXIT_NO_PROGRAM

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for i, candidate in enumerate(outcome.candidates, 1):
        table_path = out_dir / f"candidate-{i}.table.csv"
        spec_path = out_dir / f"candidate-{i}.spec.json"
        table_path.write_bytes(serialize_table(candidate.table, "csv"))
        spec_path.write_text(json.dumps(candidate.spec, indent=2))
        print(f"wrote {table_path} and {spec_path}")
        if args.render:
            from .render import render_preview

            png_path = out_dir / f"candidate-{i}.png"
            render_preview(candidate.spec, png_path)
            print(f"wrote {png_path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# serve

def cmd_serve(args) -> int:
    import uvicorn

    from .api import create_app

    app = create_app(args.data_dir, _backend_config(args),
                     cors_origins=tuple(args.cors_origin or ()))
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="conceptviz",
        description="Concept-driven chart authoring from the command line")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesize reshaping programs")
    p.add_argument("--table", required=True)
    p.add_argument("--example", required=True)
    p.add_argument("--max-depth", type=int, default=2)
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("derive", help="append a derived column")
    p.add_argument("--table", required=True)
    p.add_argument("--sources", required=True,
                   help="comma-separated source column names")
    p.add_argument("--desc", required=True)
    p.add_argument("--out", required=True, help="output column name")
    p.add_argument("--backend", choices=["offline", "remote"])
    p.add_argument("--config")
    p.add_argument("--pick", type=int, default=0)
    p.add_argument("--show-candidates", action="store_true")
    p.set_defaults(fn=cmd_derive)

    p = sub.add_parser("formulate", help="run the formulate pipeline")
    p.add_argument("--session", required=True)
    p.add_argument("--chart", required=True)
    p.add_argument("--example")
    p.add_argument("--out-dir", default=".")
    p.add_argument("--render", action="store_true",
                   help="also write matplotlib preview PNGs")
    p.set_defaults(fn=cmd_formulate)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8200)
    p.add_argument("--data-dir", default="./conceptviz-data")
    p.add_argument("--backend", choices=["offline", "remote"])
    p.add_argument("--config")
    p.add_argument("--cors-origin", action="append")
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
