"""Numeric microdata tables: loading, saving, statistics, normalization, synthesis.

A :class:`Microdata` bundles a float64 matrix with an
:class:`~microanon.schema.AttributeSchema`; rows are immutable after
construction and carry stable integer row ids so masked outputs stay
aligned with their originals.

CSV files are RFC-4180 with a header row naming every schema attribute in
order; all cells must parse as finite real numbers.  Floats are written
with 17 significant digits so a save/load round trip is bit-exact.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .schema import Attribute, AttributeRole, AttributeSchema

_FLOAT_FMT = "%.17g"


@dataclass(frozen=True)
class Microdata:
    """An immutable (n x m) numeric table with per-column roles."""

    schema: AttributeSchema
    rows: np.ndarray
    row_ids: np.ndarray = None  # defaults to 0..n-1

    def __post_init__(self):
        rows = np.array(self.rows, dtype=np.float64, copy=True)
        if rows.ndim != 2:
            raise DataError(f"rows must be a 2-D matrix, got ndim={rows.ndim}")
        if rows.shape[0] < 1:
            raise DataError("microdata must contain at least one record")
        if rows.shape[1] != self.schema.n_attributes:
            raise DataError(
                f"row width {rows.shape[1]} does not match schema with "
                f"{self.schema.n_attributes} attributes"
            )
        if not np.isfinite(rows).all():
            bad = np.argwhere(~np.isfinite(rows))[0]
            raise DataError(f"non-finite value at row {bad[0]}, column {bad[1]}")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        if self.row_ids is None:
            ids = np.arange(rows.shape[0], dtype=np.int64)
        else:
            ids = np.array(self.row_ids, dtype=np.int64, copy=True)
            if ids.shape != (rows.shape[0],):
                raise DataError("row_ids length must equal the number of rows")
        ids.setflags(write=False)
        object.__setattr__(self, "row_ids", ids)

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def m(self) -> int:
        return self.rows.shape[1]

    def project(self, role: AttributeRole) -> np.ndarray:
        """Columns carrying ``role`` as a read-only (n x p) matrix.

        Raises :class:`DataError` when the schema has no column in that role.
        """
        idx = self.schema.indices_for(role)
        if not idx:
            raise DataError(f"schema has no attribute with role '{AttributeRole(role).value}'")
        return self.rows[:, idx]

    def with_rows(self, rows: np.ndarray) -> "Microdata":
        """Same schema and row ids, new values."""
        return Microdata(self.schema, rows, self.row_ids)

    def equals(self, other: "Microdata") -> bool:
        return (
            self.schema == other.schema
            and np.array_equal(self.rows, other.rows)
            and np.array_equal(self.row_ids, other.row_ids)
        )


@dataclass(frozen=True)
class ColumnStats:
    """Per-column summary aligned with a schema: min, max, mean, population std."""

    names: tuple[str, ...]
    mins: np.ndarray
    maxs: np.ndarray
    means: np.ndarray
    stds: np.ndarray

    def __post_init__(self):
        for field in ("mins", "maxs", "means", "stds"):
            arr = np.array(getattr(self, field), dtype=np.float64, copy=True)
            if arr.shape != (len(self.names),):
                raise DataError(f"{field} must have one entry per column")
            arr.setflags(write=False)
            object.__setattr__(self, field, arr)


def column_stats(md: Microdata) -> ColumnStats:
    """Min, max, mean and population standard deviation (divisor n) per column."""
    rows = md.rows
    return ColumnStats(
        names=md.schema.names,
        mins=rows.min(axis=0),
        maxs=rows.max(axis=0),
        means=rows.mean(axis=0),
        stds=rows.std(axis=0),  # population convention, ddof=0
    )


def min_max_normalize(md: Microdata, stats: ColumnStats | None = None,
                      mode: str = "strict") -> Microdata:
    """Rescale every column to [0, 1] via (v - min) / (max - min).

    ``stats`` defaults to the table's own statistics; pass the original
    table's stats to place a masked table on the same scale.  Constant
    columns (max == min) are rejected in ``strict`` mode and mapped to all
    zeros in ``lenient`` mode.
    """
    if mode not in ("strict", "lenient"):
        raise ValueError(f"mode must be 'strict' or 'lenient', got {mode!r}")
    if stats is None:
        stats = column_stats(md)
    if stats.names != md.schema.names:
        raise DataError("column stats do not match the table's schema")
    span = stats.maxs - stats.mins
    flat = span == 0.0
    if flat.any():
        if mode == "strict":
            names = [stats.names[i] for i in np.flatnonzero(flat)]
            raise DataError(
                f"constant column(s) cannot be min-max normalized: {names}; "
                "drop them or use lenient mode"
            )
        span = np.where(flat, 1.0, span)
    out = (md.rows - stats.mins) / span
    if flat.any():
        out[:, flat] = 0.0
    return md.with_rows(out)


def min_max_denormalize(md: Microdata, stats: ColumnStats) -> Microdata:
    """Inverse of :func:`min_max_normalize` for the given stats."""
    if stats.names != md.schema.names:
        raise DataError("column stats do not match the table's schema")
    span = stats.maxs - stats.mins
    return md.with_rows(md.rows * span + stats.mins)


def load_table(path: str | Path, schema: AttributeSchema) -> Microdata:
    """Read an RFC-4180 CSV whose header matches the schema names in order."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"data file not found: {path}")
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path} is empty; expected a header row") from None
        if tuple(header) != schema.names:
            raise DataError(
                f"{path} header {tuple(header)} does not match schema names {schema.names}"
            )
        values: list[list[float]] = []
        for lineno, record in enumerate(reader, start=2):
            if not record:
                continue  # tolerate a trailing blank line
            if len(record) != schema.n_attributes:
                raise DataError(
                    f"{path} line {lineno}: expected {schema.n_attributes} cells, "
                    f"got {len(record)}"
                )
            parsed = []
            for col, cell in enumerate(record):
                try:
                    v = float(cell)
                except ValueError:
                    raise DataError(
                        f"{path} line {lineno}, column '{schema.names[col]}': "
                        f"cell {cell!r} is not numeric"
                    ) from None
                if not math.isfinite(v):
                    raise DataError(
                        f"{path} line {lineno}, column '{schema.names[col]}': "
                        f"non-finite value {cell!r}"
                    )
                parsed.append(v)
            values.append(parsed)
    if not values:
        raise DataError(f"{path} contains a header but no data rows")
    return Microdata(schema, np.array(values, dtype=np.float64))


def save_table(md: Microdata, path: str | Path) -> None:
    """Write a CSV with the schema's header; floats carry 17 significant digits."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(md.schema.names)
        for row in md.rows:
            writer.writerow([_FLOAT_FMT % v for v in row])


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a synthetic microdata table with known structure.

    Quasi-identifiers are drawn around ``qid_blob_centers`` (one blob per
    center) and confidential attributes around ``conf_class_centers`` (one
    class per center), with isotropic Gaussian noise of scale
    ``noise_scale``.  Blob/class assignments cycle so every (blob, class)
    cell has nearly equal size.
    """

    n: int
    qid_blob_centers: tuple[tuple[float, ...], ...]
    conf_class_centers: tuple[tuple[float, ...], ...]
    noise_scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if not self.qid_blob_centers or not self.conf_class_centers:
            raise ValueError("at least one blob center and one class center are required")
        qdims = {len(c) for c in self.qid_blob_centers}
        cdims = {len(c) for c in self.conf_class_centers}
        if len(qdims) != 1 or len(cdims) != 1 or 0 in qdims | cdims:
            raise ValueError("all centers of a kind must share one positive dimension")
        if self.noise_scale < 0:
            raise ValueError("noise_scale must be non-negative")


@dataclass(frozen=True)
class SyntheticTruth:
    """Ground-truth labels for a synthesized table."""

    blob_labels: np.ndarray
    class_labels: np.ndarray


def synthesize(spec: SyntheticSpec) -> tuple[Microdata, SyntheticTruth]:
    """Build a synthetic table plus its ground-truth blob/class labels.

    Deterministic for a fixed spec (noise comes from a seeded generator).
    """
    blobs = np.asarray(spec.qid_blob_centers, dtype=np.float64)
    classes = np.asarray(spec.conf_class_centers, dtype=np.float64)
    n_blobs, qdim = blobs.shape
    n_classes, cdim = classes.shape
    idx = np.arange(spec.n)
    cell = idx % (n_blobs * n_classes)
    blob_labels = cell % n_blobs
    class_labels = cell // n_blobs
    rng = np.random.default_rng(spec.seed)
    qids = blobs[blob_labels] + spec.noise_scale * rng.normal(size=(spec.n, qdim))
    confs = classes[class_labels] + spec.noise_scale * rng.normal(size=(spec.n, cdim))
    # quasi-identifiers first, then confidential columns
    schema = AttributeSchema(tuple(
        [Attribute(f"q{j}", AttributeRole.QUASI_IDENTIFIER) for j in range(qdim)]
        + [Attribute(f"s{j}", AttributeRole.CONFIDENTIAL) for j in range(cdim)]
    ))
    md = Microdata(schema, np.hstack([qids, confs]))
    return md, SyntheticTruth(blob_labels=blob_labels, class_labels=class_labels)
