"""Command-line interface.

Subcommands: ``anonymize`` (mask a table), ``evaluate`` (utility/risk
report for an original/masked pair), ``sweep`` (benchmark grid from a
JSON spec), ``inspect`` (dataset summary).

Exit codes: 0 success, 1 usage error, 2 data error, 3 method failure.
Output files are written to a temporary name and renamed on success, so
failed runs leave nothing behind.  With ``--json``, stdout carries only
the JSON payload; progress and diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import tempfile
from pathlib import Path

from .bench import SweepSpec, emit_report, run_sweep
from .dataset import Microdata, column_stats, load_table, save_table
from .errors import DataError, MethodError
from .fpclust import FuzzinessParams
from .metrics import evaluate, k_anonymity_check
from .microagg import METHODS, AnonymizationConfig, anonymize
from .schema import AttributeRole, AttributeSchema

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_METHOD = 3


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; this toolkit reserves 2 for data errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> _Parser:
    parser = _Parser(prog="microanon",
                     description="k-anonymity by microaggregation, with evaluation tools")
    sub = parser.add_subparsers(dest="command", required=True)

    p_anon = sub.add_parser("anonymize", help="mask a table with one method")
    p_anon.add_argument("--input", required=True, help="input CSV")
    p_anon.add_argument("--schema", required=True, help="schema JSON")
    p_anon.add_argument("--method", required=True, choices=METHODS)
    p_anon.add_argument("--k", type=int, default=None, help="privacy parameter k")
    p_anon.add_argument("--groups-count", type=int, default=None,
                        help="hm_pfsom only: fix groups per sub-table, derive k")
    p_anon.add_argument("--out", required=True, help="masked CSV path")
    p_anon.add_argument("--seed", type=int, default=0)
    p_anon.add_argument("--c-min", type=int, default=None)
    p_anon.add_argument("--c-max", type=int, default=None)
    p_anon.add_argument("--m-fuzz", type=float, default=2.0)
    p_anon.add_argument("--eta", type=float, default=2.0)
    p_anon.add_argument("--tol", type=float, default=1e-6)
    p_anon.add_argument("--max-iter", type=int, default=300)
    p_anon.add_argument("--normalize", choices=("strict", "lenient"), default="strict")
    p_anon.add_argument("--encode-categorical", action="store_true",
                        help="factorize non-numeric columns; writes a code map beside --out")
    p_anon.add_argument("--json", action="store_true", help="JSON summary on stdout")

    p_eval = sub.add_parser("evaluate", help="report utility and risk for a masked table")
    p_eval.add_argument("--input", required=True, help="original CSV")
    p_eval.add_argument("--masked", required=True, help="masked CSV")
    p_eval.add_argument("--schema", required=True, help="schema JSON (of the original)")
    p_eval.add_argument("--k", type=int, default=None, help="verify k-anonymity at this k")
    p_eval.add_argument("--encode-categorical", action="store_true")
    p_eval.add_argument("--json", action="store_true")

    p_sweep = sub.add_parser("sweep", help="run a benchmark grid from a JSON spec")
    p_sweep.add_argument("spec", help="sweep spec JSON file")
    p_sweep.add_argument("--json", action="store_true",
                         help="also emit the JSON report next to the CSV")
    p_sweep.add_argument("--long", action="store_true",
                         help="also emit a plot-ready long-format CSV")

    p_inspect = sub.add_parser("inspect", help="summarize a dataset against its schema")
    p_inspect.add_argument("--input", required=True)
    p_inspect.add_argument("--schema", required=True)
    p_inspect.add_argument("--encode-categorical", action="store_true")
    p_inspect.add_argument("--json", action="store_true")
    return parser


def _encode_categorical(path: Path, schema: AttributeSchema) -> tuple[Path, dict]:
    """Rewrite non-numeric columns as sorted-order integer codes.

    Returns the rewritten temp CSV and the code map
    {column: {original: code}}.  Purely textual: numeric columns pass
    through byte-for-byte.
    """
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path} is empty; expected a header row") from None
        records = [r for r in reader if r]
    width = len(header)
    for lineno, rec in enumerate(records, start=2):
        if len(rec) != width:
            raise DataError(f"{path} line {lineno}: expected {width} cells, got {len(rec)}")
    code_map: dict[str, dict[str, int]] = {}
    for col in range(width):
        cells = [rec[col] for rec in records]
        numeric = True
        for cell in cells:
            try:
                float(cell)
            except ValueError:
                numeric = False
                break
        if numeric:
            continue
        codes = {value: i for i, value in enumerate(sorted(set(cells)))}
        code_map[header[col]] = codes
        for rec in records:
            rec[col] = str(codes[rec[col]])
    tmp = tempfile.NamedTemporaryFile(
        "w", encoding="utf-8", newline="", suffix=".csv",
        dir=str(path.parent), delete=False,
    )
    with tmp as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(records)
    return Path(tmp.name), code_map


def _load(path_str: str, schema: AttributeSchema, encode: bool) -> tuple[Microdata, dict]:
    path = Path(path_str)
    if not encode:
        return load_table(path, schema), {}
    if not path.exists():
        raise DataError(f"data file not found: {path}")
    encoded_path, code_map = _encode_categorical(path, schema)
    try:
        return load_table(encoded_path, schema), code_map
    finally:
        encoded_path.unlink(missing_ok=True)


def _atomic_write_text(path: Path, text: str) -> None:
    tmp = tempfile.NamedTemporaryFile(
        "w", encoding="utf-8", newline="", dir=str(path.parent), delete=False,
    )
    with tmp as fh:
        fh.write(text)
    os.replace(tmp.name, path)


def _masked_for_output(md: Microdata) -> Microdata:
    """Masked tables are published without identifier columns."""
    schema = md.schema
    if not schema.indices_for(AttributeRole.IDENTIFIER):
        return md
    kept_schema = schema.without_identifiers()
    kept_cols = [i for i, a in enumerate(schema.attributes)
                 if a.role is not AttributeRole.IDENTIFIER]
    return Microdata(kept_schema, md.rows[:, kept_cols], md.row_ids)


def _cmd_anonymize(args) -> int:
    schema = AttributeSchema.load(args.schema)
    md, code_map = _load(args.input, schema, args.encode_categorical)
    if args.k is None and args.groups_count is None:
        print("anonymize: provide --k (or --groups-count for hm_pfsom)", file=sys.stderr)
        return EXIT_USAGE
    c_range = None
    if args.c_min is not None or args.c_max is not None:
        if args.c_min is None or args.c_max is None:
            print("anonymize: --c-min and --c-max must be given together", file=sys.stderr)
            return EXIT_USAGE
        c_range = (args.c_min, args.c_max)
    fuzz = FuzzinessParams(m_fuzz=args.m_fuzz, eta=args.eta,
                           max_iter=args.max_iter, tol=args.tol, seed=args.seed)
    config = AnonymizationConfig(
        method=args.method, k=args.k if args.k is not None else 1,
        fuzz=fuzz, c_range=c_range, groups_count=args.groups_count,
        normalize_mode=args.normalize,
    )
    result = anonymize(md, config)
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_md = _masked_for_output(result.masked)

    # stage every file, then rename: no partial outputs on failure
    staged: list[tuple[str, Path]] = []
    tmp = tempfile.NamedTemporaryFile("w", encoding="utf-8", newline="",
                                      dir=str(out_path.parent), delete=False)
    tmp.close()
    save_table(out_md, tmp.name)
    staged.append((tmp.name, out_path))
    if result.sub_structure is not None:
        structure_path = out_path.with_suffix(out_path.suffix + ".structure.json")
        tmp2 = tempfile.NamedTemporaryFile("w", encoding="utf-8", newline="",
                                           dir=str(out_path.parent), delete=False)
        with tmp2 as fh:
            json.dump(result.structure_dict(), fh, indent=2)
            fh.write("\n")
        staged.append((tmp2.name, structure_path))
    if code_map:
        codes_path = out_path.with_suffix(out_path.suffix + ".codes.json")
        tmp3 = tempfile.NamedTemporaryFile("w", encoding="utf-8", newline="",
                                           dir=str(out_path.parent), delete=False)
        with tmp3 as fh:
            json.dump(code_map, fh, indent=2)
            fh.write("\n")
        staged.append((tmp3.name, codes_path))
    for src, dst in staged:
        os.replace(src, dst)

    k_max = k_anonymity_check(result.masked, 1).k_max
    summary = {"n": md.n, "method": result.method, "k": result.k, "k_max": k_max,
               "out": str(out_path)}
    if args.json:
        print(json.dumps(summary))
    else:
        print(f"anonymized n={md.n} method={result.method} k={result.k} k_max={k_max} "
              f"-> {out_path}")
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    schema = AttributeSchema.load(args.schema)
    original, _ = _load(args.input, schema, args.encode_categorical)
    # masked files may have been published without identifier columns
    masked_schema = schema
    with Path(args.masked).open("r", encoding="utf-8", newline="") as fh:
        try:
            masked_header = tuple(next(csv.reader(fh)))
        except StopIteration:
            raise DataError(f"{args.masked} is empty; expected a header row") from None
    if masked_header != schema.names and masked_header == schema.without_identifiers().names:
        masked_schema = schema.without_identifiers()
    masked, _ = _load(args.masked, masked_schema, args.encode_categorical)
    if masked.n != original.n:
        raise DataError(
            f"original has {original.n} records but masked has {masked.n}; "
            "evaluation needs row-aligned tables"
        )
    report = evaluate(original, masked, k=args.k if args.k is not None else 1)
    doc = report.to_dict()
    if args.k is not None:
        doc["k_requested"] = args.k
        doc["k_holds"] = report.k_anonymous_at >= args.k
    if args.json:
        print(json.dumps(doc))
    else:
        print(f"il            {report.il:.6f}")
        print(f"il_normalized {report.il_normalized:.6f}")
        print(f"linked        {report.dbrl.linked}")
        print(f"second_nearest {report.dbrl.second_nearest}")
        print(f"not_linked    {report.dbrl.not_linked}")
        print(f"expected_matches {report.dbrl.expected_matches:.6f}")
        print(f"min_sse       {report.min_sse:.6f}")
        print(f"k_anonymous_at {report.k_anonymous_at}")
        if args.k is not None:
            verdict = "holds" if report.k_anonymous_at >= args.k else "fails"
            print(f"k={args.k}           {verdict}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    spec = SweepSpec.from_json(args.spec)
    def progress(row):
        status = row.error if row.error else "ok"
        print(f"sweep: {row.method} k={row.k}: {status}", file=sys.stderr)
    rows = run_sweep(spec, progress=progress)
    stem = Path(spec.dataset).stem
    formats = ("csv", "json") if args.json else ("csv",)
    written = emit_report(rows, spec.out_dir, stem, formats=formats,
                          long_format=args.long)
    for path in written:
        print(f"sweep: wrote {path}", file=sys.stderr)
    print(str(written[0]) if not args.json else json.dumps([str(p) for p in written]))
    return EXIT_OK


def _cmd_inspect(args) -> int:
    schema = AttributeSchema.load(args.schema)
    md, code_map = _load(args.input, schema, args.encode_categorical)
    stats = column_stats(md)
    k_max = k_anonymity_check(md, 1).k_max
    doc = {
        "n": md.n,
        "attributes": [
            {
                "name": a.name,
                "role": a.role.value,
                "min": float(stats.mins[i]),
                "max": float(stats.maxs[i]),
                "mean": float(stats.means[i]),
                "std": float(stats.stds[i]),
            }
            for i, a in enumerate(md.schema.attributes)
        ],
        "k_max": k_max,
    }
    if code_map:
        doc["encoded_columns"] = sorted(code_map)
    if args.json:
        print(json.dumps(doc))
    else:
        print(f"records: {md.n}")
        print(f"k_max of raw quasi-identifiers: {k_max}")
        print(f"{'column':<20} {'role':<18} {'min':>12} {'max':>12} {'mean':>12} {'std':>12}")
        for entry in doc["attributes"]:
            print(f"{entry['name']:<20} {entry['role']:<18} "
                  f"{entry['min']:>12.4g} {entry['max']:>12.4g} "
                  f"{entry['mean']:>12.4g} {entry['std']:>12.4g}")
        if code_map:
            print(f"encoded columns: {', '.join(sorted(code_map))}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    handlers = {
        "anonymize": _cmd_anonymize,
        "evaluate": _cmd_evaluate,
        "sweep": _cmd_sweep,
        "inspect": _cmd_inspect,
    }
    try:
        return handlers[args.command](args)
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except MethodError as exc:
        print(f"method failure: {exc}", file=sys.stderr)
        return EXIT_METHOD
    except ValueError as exc:
        print(f"invalid arguments: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
