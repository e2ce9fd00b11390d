"""Typed tabular data: schemas, CSV ingestion and the missing-value policy.

Columns are stored column-major as numpy arrays.  Continuous columns are
float64 with ``nan`` for missing cells; categorical and binary columns are
int64 codes into ``ColumnSchema.categories`` with ``-1`` for missing cells.
"""

from __future__ import annotations

import csv
import enum
import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    EmptyTable,
    NotCategorical,
    SchemaError,
    UnknownColumn,
    UnparseableCell,
)

MISSING_TOKENS = frozenset({"", "NA", "NaN", "nan"})
MISSING_CODE = -1


class Kind(str, enum.Enum):
    CONTINUOUS = "continuous"
    CATEGORICAL = "categorical"
    BINARY = "binary"


class Role(str, enum.Enum):
    FEATURE = "feature"
    OUTCOME = "outcome"
    IGNORE = "ignore"


class MissingPolicy(str, enum.Enum):
    DROP_ROWS = "drop"
    IMPUTE_CENTRAL = "impute"


def category_order(col: "ColumnSchema | Sequence[str]") -> list[str]:
    """Labels of a categorical column in their canonical (lexicographic) order.

    "First" and "last" category for the dual encoding refer to this order.
    """
    if isinstance(col, ColumnSchema):
        if col.kind is Kind.CONTINUOUS:
            raise NotCategorical(f"column {col.name!r} is continuous")
        labels = col.categories
    else:
        labels = col
    return sorted(labels)


@dataclass(frozen=True)
class ColumnSchema:
    name: str
    kind: Kind
    categories: tuple[str, ...] = ()
    role: Role = Role.FEATURE

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        object.__setattr__(self, "role", Role(self.role))
        cats = tuple(str(c) for c in self.categories)
        if len(set(cats)) != len(cats):
            raise SchemaError(f"duplicate category labels in column {self.name!r}")
        if self.kind is Kind.CONTINUOUS and cats:
            raise SchemaError(f"continuous column {self.name!r} cannot declare categories")
        object.__setattr__(self, "categories", cats)

    @property
    def is_categorical(self) -> bool:
        return self.kind is not Kind.CONTINUOUS

    def with_categories(self, categories) -> "ColumnSchema":
        return ColumnSchema(self.name, self.kind, tuple(categories), self.role)

    def to_dict(self) -> dict:
        d = {"kind": self.kind.value, "role": self.role.value}
        if self.categories:
            d["categories"] = list(self.categories)
        return d


def _check_schema(schema: Sequence[ColumnSchema]) -> None:
    names = [c.name for c in schema]
    if len(set(names)) != len(names):
        raise SchemaError("duplicate column names in schema")
    outcomes = [c.name for c in schema if c.role is Role.OUTCOME]
    if len(outcomes) != 1:
        raise SchemaError(f"schema needs exactly one outcome column, found {outcomes}")
    for c in schema:
        if c.kind is Kind.BINARY and len(c.categories) != 2:
            raise SchemaError(
                f"binary column {c.name!r} has {len(c.categories)} categories, expected 2"
            )


@dataclass(frozen=True, eq=False)
class DataTable:
    """Immutable column-major table.  ``schema`` excludes ignored columns."""

    schema: tuple[ColumnSchema, ...]
    columns: Mapping[str, np.ndarray] = field(repr=False)
    n_rows: int = 0

    def __post_init__(self):
        schema = tuple(self.schema)
        object.__setattr__(self, "schema", schema)
        _check_schema(schema)
        cols = {}
        n = None
        for c in schema:
            if c.name not in self.columns:
                raise SchemaError(f"missing data for column {c.name!r}")
            arr = np.asarray(self.columns[c.name])
            if c.is_categorical:
                arr = arr.astype(np.int64, copy=True)
                bad = (arr < MISSING_CODE) | (arr >= len(c.categories))
                if bad.any():
                    raise SchemaError(f"invalid category code in column {c.name!r}")
            else:
                arr = arr.astype(np.float64, copy=True)
            arr.setflags(write=False)
            if n is None:
                n = len(arr)
            elif len(arr) != n:
                raise SchemaError("columns have unequal lengths")
            cols[c.name] = arr
        object.__setattr__(self, "columns", cols)
        object.__setattr__(self, "n_rows", 0 if n is None else n)

    def __eq__(self, other):
        if not isinstance(other, DataTable):
            return NotImplemented
        return (
            self.schema == other.schema
            and self.n_rows == other.n_rows
            and all(
                np.array_equal(self.columns[c.name], other.columns[c.name], equal_nan=True)
                for c in self.schema
            )
        )

    __hash__ = None

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.schema]

    @property
    def outcome(self) -> ColumnSchema:
        return next(c for c in self.schema if c.role is Role.OUTCOME)

    def column(self, name: str) -> ColumnSchema:
        for c in self.schema:
            if c.name == name:
                return c
        raise UnknownColumn(f"no column named {name!r}")

    def missing_mask(self) -> np.ndarray:
        """Boolean (n_rows,) mask of rows holding at least one missing cell."""
        mask = np.zeros(self.n_rows, dtype=bool)
        for c in self.schema:
            arr = self.columns[c.name]
            mask |= (arr == MISSING_CODE) if c.is_categorical else np.isnan(arr)
        return mask

    def has_missing(self) -> bool:
        return bool(self.missing_mask().any())

    def take(self, rows) -> "DataTable":
        rows = np.asarray(rows)
        return DataTable(self.schema, {k: v[rows] for k, v in self.columns.items()})

    def labels(self, name: str) -> list:
        """Cells of a column as Python values (category label, float or None)."""
        c = self.column(name)
        arr = self.columns[name]
        if c.is_categorical:
            return [None if v == MISSING_CODE else c.categories[v] for v in arr]
        return [None if np.isnan(v) else float(v) for v in arr]

    def replace(self, schema: Sequence[ColumnSchema], columns: Mapping[str, np.ndarray]) -> "DataTable":
        new_cols = dict(self.columns)
        new_cols.update(columns)
        return DataTable(tuple(schema), {c.name: new_cols[c.name] for c in schema})


def schema_from_dict(doc: Mapping) -> list[ColumnSchema]:
    """Build a schema from ``{column: {kind, role, categories?}}``."""
    if not isinstance(doc, Mapping):
        raise SchemaError("schema document must be a JSON object")
    out = []
    for name, spec in doc.items():
        if not isinstance(spec, Mapping):
            raise SchemaError(f"schema entry for {name!r} must be an object")
        try:
            kind = Kind(spec.get("kind", "continuous"))
            role = Role(spec.get("role", "feature"))
        except ValueError as exc:
            raise SchemaError(f"column {name!r}: {exc}") from None
        cats = tuple(str(c) for c in spec.get("categories", ()))
        out.append(ColumnSchema(name, kind, cats, role))
    outcomes = [c.name for c in out if c.role is Role.OUTCOME]
    if len(outcomes) != 1:
        raise SchemaError(f"schema needs exactly one outcome column, found {outcomes}")
    return out


def load_schema(path) -> list[ColumnSchema]:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"schema {path}: {exc}") from None
    return schema_from_dict(doc)


def _parse_float(text: str, column: str, row: int) -> float:
    try:
        v = float(text)
    except ValueError:
        raise UnparseableCell(column, row, text) from None
    if not np.isfinite(v):
        raise UnparseableCell(column, row, text)
    return v


def load_csv(
    path,
    schema,
    missing_policy: MissingPolicy | str = MissingPolicy.DROP_ROWS,
) -> DataTable:
    """Read a comma-separated UTF-8 file with a header row into a DataTable.

    ``schema`` must name every header column; columns with role ``ignore`` are
    read past.  Categories not declared explicitly are inferred from the
    observed labels.
    """
    policy = MissingPolicy(missing_policy)
    by_name = {c.name: c for c in schema}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise EmptyTable(f"{path}: no header row") from None
        unknown = sorted(set(header) - set(by_name))
        absent = sorted(set(by_name) - set(header))
        if unknown or absent:
            raise UnknownColumn(f"header/schema mismatch: not in schema {unknown}, not in file {absent}")
        if len(set(header)) != len(header):
            raise UnknownColumn("duplicate header names")
        raw = {h: [] for h in header}
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(header):
                raise UnparseableCell("<row>", lineno, ",".join(rec))
            for h, v in zip(header, rec):
                raw[h].append(v.strip())

    kept = [by_name[h] for h in header if by_name[h].role is not Role.IGNORE]
    # schema order follows the schema document, not the file
    kept.sort(key=lambda c: list(by_name).index(c.name))
    columns = {}
    final_schema = []
    for spec in kept:
        cells = raw[spec.name]
        if spec.kind is Kind.CONTINUOUS:
            arr = np.array(
                [np.nan if t in MISSING_TOKENS else _parse_float(t, spec.name, i + 2) for i, t in enumerate(cells)],
                dtype=np.float64,
            )
            final_schema.append(ColumnSchema(spec.name, Kind.CONTINUOUS, (), spec.role))
        else:
            observed = {t for t in cells if t not in MISSING_TOKENS}
            if spec.categories:
                cats = list(spec.categories)
                extra = observed - set(cats)
                if extra:
                    bad = next(t for t in cells if t in extra)
                    raise UnparseableCell(spec.name, cells.index(bad) + 2, bad)
            else:
                cats = category_order(observed)
            col = ColumnSchema(spec.name, spec.kind, tuple(cats), spec.role)
            index = {c: i for i, c in enumerate(col.categories)}
            arr = np.array([MISSING_CODE if t in MISSING_TOKENS else index[t] for t in cells], dtype=np.int64)
            final_schema.append(col)
        columns[spec.name] = arr

    table = DataTable(tuple(final_schema), columns)
    table = apply_missing_policy(table, policy)
    if table.n_rows == 0:
        raise EmptyTable(f"{path}: no usable rows")
    return table


def apply_missing_policy(table: DataTable, policy: MissingPolicy | str) -> DataTable:
    policy = MissingPolicy(policy)
    if policy is MissingPolicy.DROP_ROWS:
        keep = ~table.missing_mask()
        return table.take(np.flatnonzero(keep))
    columns = {}
    for c in table.schema:
        arr = table.columns[c.name].copy()
        if c.is_categorical:
            miss = arr == MISSING_CODE
            if miss.any() and (~miss).any():
                counts = np.bincount(arr[~miss], minlength=len(c.categories))
                arr[miss] = int(np.argmax(counts))  # ties -> first in category order
        else:
            miss = np.isnan(arr)
            if miss.any() and (~miss).any():
                arr[miss] = float(np.median(arr[~miss]))
        columns[c.name] = arr
    return DataTable(table.schema, columns)


def table_from_records(schema: Sequence[ColumnSchema], records: Mapping[str, Sequence]) -> DataTable:
    """Build a table from Python values (labels for categoricals, None for missing)."""
    columns = {}
    for c in schema:
        vals = records[c.name]
        if c.is_categorical:
            index = {lab: i for i, lab in enumerate(c.categories)}
            try:
                columns[c.name] = np.array(
                    [MISSING_CODE if v is None else index[str(v)] for v in vals], dtype=np.int64
                )
            except KeyError as exc:
                raise UnparseableCell(c.name, -1, exc.args[0]) from None
        else:
            columns[c.name] = np.array([np.nan if v is None else float(v) for v in vals], dtype=np.float64)
    return DataTable(tuple(schema), columns)
