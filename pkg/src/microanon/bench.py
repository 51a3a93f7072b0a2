"""Benchmark harness: sweep methods and k values over one dataset, emit a report.

A sweep spec is a JSON file:

    {
      "dataset": "census.csv",
      "schema": "census.schema.json",
      "methods": ["mdav", "hm_pfsom"],
      "k_values": [3, 5, 10],
      "seed": 0,
      "out_dir": "results"
    }

Each (method, k) cell runs independently (bounded thread pool) and yields
one result row; a failing cell records its error and the sweep carries
on.  Reports land in ``out_dir`` as ``sweep_<dataset-stem>.csv`` or
``.json``; apart from the wall-time column, reruns are byte-identical.
"""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .dataset import Microdata, load_table
from .errors import DataError, MethodError
from .fpclust import FuzzinessParams
from .metrics import evaluate
from .microagg import METHODS, AnonymizationConfig, anonymize
from .schema import AttributeSchema

COLUMNS = (
    "method", "k", "il", "il_normalized", "linked", "second_nearest",
    "expected_matches", "min_sse", "k_max", "wall_time_ms", "error",
)


@dataclass(frozen=True)
class SweepSpec:
    dataset: str
    schema: str
    methods: tuple[str, ...]
    k_values: tuple[int, ...]
    seed: int = 0
    out_dir: str = "."
    fuzz: FuzzinessParams = field(default_factory=FuzzinessParams)
    c_range: tuple[int, int] | None = None
    class_c_range: tuple[int, int] | None = None
    normalize_mode: str = "strict"

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "k_values", tuple(int(k) for k in self.k_values))
        if not self.methods:
            raise DataError("sweep spec needs at least one method")
        for m in self.methods:
            if m not in METHODS:
                raise DataError(f"unknown method {m!r} in sweep spec; choose from {METHODS}")
        if not self.k_values:
            raise DataError("sweep spec needs at least one k value")
        if any(b <= a for a, b in zip(self.k_values, self.k_values[1:])):
            raise DataError(f"k_values must be strictly increasing, got {list(self.k_values)}")
        if any(k < 1 for k in self.k_values):
            raise DataError("k values must be >= 1")

    @classmethod
    def from_json(cls, path: str | Path) -> "SweepSpec":
        path = Path(path)
        if not path.exists():
            raise DataError(f"sweep spec not found: {path}")
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise DataError(f"sweep spec {path} is not valid JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise DataError("sweep spec must be a JSON object")
        for req in ("dataset", "schema", "methods", "k_values"):
            if req not in doc:
                raise DataError(f'sweep spec is missing required field "{req}"')
        fuzz_doc = doc.get("fuzz", {})
        if not isinstance(fuzz_doc, dict):
            raise DataError('"fuzz" must be an object of parameter overrides')
        try:
            fuzz = FuzzinessParams(**fuzz_doc)
        except (TypeError, ValueError) as exc:
            raise DataError(f"bad fuzz parameters in sweep spec: {exc}") from None
        # relative paths resolve against the spec file's directory
        base = path.parent

        def _resolve(p: str) -> str:
            q = Path(p)
            return str(q if q.is_absolute() else base / q)

        return cls(
            dataset=_resolve(str(doc["dataset"])),
            schema=_resolve(str(doc["schema"])),
            methods=tuple(doc["methods"]),
            k_values=tuple(doc["k_values"]),
            seed=int(doc.get("seed", 0)),
            out_dir=_resolve(str(doc.get("out_dir", "."))),
            fuzz=fuzz,
            c_range=tuple(doc["c_range"]) if doc.get("c_range") else None,
            class_c_range=tuple(doc["class_c_range"]) if doc.get("class_c_range") else None,
            normalize_mode=str(doc.get("normalize_mode", "strict")),
        )


@dataclass(frozen=True)
class SweepRow:
    method: str
    k: int
    il: float | None = None
    il_normalized: float | None = None
    linked: int | None = None
    second_nearest: int | None = None
    expected_matches: float | None = None
    min_sse: float | None = None
    k_max: int | None = None
    wall_time_ms: float | None = None
    error: str | None = None
    sub_summary: dict | None = None

    def to_dict(self, with_time: bool = True) -> dict:
        doc = {
            "method": self.method,
            "k": self.k,
            "il": self.il,
            "il_normalized": self.il_normalized,
            "linked": self.linked,
            "second_nearest": self.second_nearest,
            "expected_matches": self.expected_matches,
            "min_sse": self.min_sse,
            "k_max": self.k_max,
            "error": self.error,
        }
        if with_time:
            doc["wall_time_ms"] = self.wall_time_ms
        if self.sub_summary is not None:
            doc["sub_summary"] = self.sub_summary
        return doc


def _run_cell(md: Microdata, spec: SweepSpec, method: str, k: int) -> SweepRow:
    start = time.perf_counter()
    try:
        config = AnonymizationConfig(
            method=method, k=k, fuzz=spec.fuzz, c_range=spec.c_range,
            class_c_range=spec.class_c_range, normalize_mode=spec.normalize_mode,
        )
        result = anonymize(md, config)
        report = evaluate(md, result.masked, result.partition, k=k)
    except (MethodError, DataError, ValueError) as exc:
        elapsed = (time.perf_counter() - start) * 1000.0
        return SweepRow(method=method, k=k, wall_time_ms=elapsed, error=str(exc))
    elapsed = (time.perf_counter() - start) * 1000.0
    sub_summary = None
    if result.sub_structure is not None:
        sub_summary = {
            "n_subs": len(result.sub_structure),
            "sub_sizes": [s.size for s in result.sub_structure],
            "cs": [s.n_classes for s in result.sub_structure],
        }
    return SweepRow(
        method=method, k=k,
        il=report.il, il_normalized=report.il_normalized,
        linked=report.dbrl.linked, second_nearest=report.dbrl.second_nearest,
        expected_matches=report.dbrl.expected_matches,
        min_sse=report.min_sse, k_max=report.k_anonymous_at,
        wall_time_ms=elapsed, error=None, sub_summary=sub_summary,
    )


def run_sweep(spec: SweepSpec, max_workers: int | None = None,
              progress=None) -> list[SweepRow]:
    """Run every (method, k) cell; rows come back in spec order.

    ``progress`` is an optional callable invoked with each finished row.
    """
    schema = AttributeSchema.load(spec.schema)
    md = load_table(spec.dataset, schema)
    cells = [(m, k) for m in spec.methods for k in spec.k_values]
    workers = max_workers or min(4, len(cells))
    rows: list[SweepRow] = []
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_run_cell, md, spec, m, k) for m, k in cells]
        for future in futures:  # submission order == spec order
            row = future.result()
            rows.append(row)
            if progress is not None:
                progress(row)
    return rows


def _fmt_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return "%.17g" % value
    return str(value)


def emit_report(rows: list[SweepRow], out_dir: str | Path, dataset_stem: str,
                formats: tuple[str, ...] = ("csv",), long_format: bool = False,
                ) -> list[Path]:
    """Write ``sweep_<dataset_stem>.<ext>`` files; returns the paths written.

    ``long_format`` adds a plot-ready ``sweep_<stem>_long.csv`` with one
    (method, k, metric, value) row per metric.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    for fmt in formats:
        if fmt == "csv":
            path = out_dir / f"sweep_{dataset_stem}.csv"
            with path.open("w", encoding="utf-8", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(COLUMNS)
                for row in rows:
                    doc = row.to_dict()
                    writer.writerow([_fmt_cell(doc.get(c)) for c in COLUMNS])
        elif fmt == "json":
            path = out_dir / f"sweep_{dataset_stem}.json"
            payload = [row.to_dict() for row in rows]
            path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        else:
            raise ValueError(f"unknown report format {fmt!r}; use 'csv' or 'json'")
        written.append(path)
    if long_format:
        path = out_dir / f"sweep_{dataset_stem}_long.csv"
        metric_cols = [c for c in COLUMNS if c not in ("method", "k", "error")]
        with path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["method", "k", "metric", "value"])
            for row in rows:
                doc = row.to_dict()
                for metric in metric_cols:
                    writer.writerow([row.method, row.k, metric, _fmt_cell(doc.get(metric))])
        written.append(path)
    return written
