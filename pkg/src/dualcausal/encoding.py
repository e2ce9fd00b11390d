"""One-hot encodings with per-column provenance.

Two reference-dropping strategies give full-rank designs; ``FULL`` keeps
every indicator and is only there to reproduce the singular-covariance
failure that motivates running the search twice.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np

from .data import DataTable, Kind, Role, category_order
from .errors import EmptyCategory, MissingData, SchemaError

log = logging.getLogger(__name__)

CONTINUOUS_TAG = "__continuous__"


class EncodingStrategy(str, enum.Enum):
    DROP_FIRST = "drop-first"
    DROP_LAST = "drop-last"
    FULL = "full"


@dataclass(frozen=True)
class ColumnProvenance:
    source_feature: str
    category: str
    strategy: EncodingStrategy
    is_outcome: bool = False

    @property
    def node_name(self) -> str:
        if self.is_outcome or self.category == CONTINUOUS_TAG:
            return self.source_feature
        return f"{self.source_feature}={self.category}"

    def to_dict(self) -> dict:
        return {
            "source_feature": self.source_feature,
            "category": self.category,
            "strategy": self.strategy.value,
            "is_outcome": self.is_outcome,
        }

    @classmethod
    def from_dict(cls, d) -> "ColumnProvenance":
        return cls(d["source_feature"], d["category"], EncodingStrategy(d["strategy"]), bool(d.get("is_outcome", False)))


@dataclass(frozen=True, eq=False)
class EncodedMatrix:
    data: np.ndarray
    provenance: tuple[ColumnProvenance, ...]
    outcome_col: int
    strategy: EncodingStrategy
    empty_categories: tuple[str, ...] = field(default=())

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64, copy=True)
        if data.ndim != 2 or data.shape[1] != len(self.provenance):
            raise ValueError("data/provenance shape mismatch")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "provenance", tuple(self.provenance))

    @property
    def n_rows(self) -> int:
        return self.data.shape[0]

    @property
    def n_cols(self) -> int:
        return self.data.shape[1]

    @property
    def names(self) -> list[str]:
        return [p.node_name for p in self.provenance]

    @property
    def outcome_name(self) -> str:
        return self.provenance[self.outcome_col].node_name

    def select(self, cols) -> "EncodedMatrix":
        """Sub-matrix over the given column indices (outcome must be kept)."""
        cols = list(cols)
        if self.outcome_col not in cols:
            raise ValueError("outcome column must be kept")
        return EncodedMatrix(
            self.data[:, cols],
            [self.provenance[c] for c in cols],
            cols.index(self.outcome_col),
            self.strategy,
            self.empty_categories,
        )


def _kept_categories(cats: list[str], strategy: EncodingStrategy) -> list[str]:
    if strategy is EncodingStrategy.DROP_FIRST:
        return cats[1:]
    if strategy is EncodingStrategy.DROP_LAST:
        return cats[:-1]
    return cats


def encode(table: DataTable, strategy, strict: bool = False) -> EncodedMatrix:
    """Expand categorical columns into 0/1 indicator columns.

    Column order is schema order, then category order.  The outcome is
    always a single indicator of its last category, whatever the strategy.
    Indicators of categories that never occur are dropped and listed in
    ``empty_categories`` (``strict=True`` raises instead).
    """
    strategy = EncodingStrategy(strategy)
    if table.has_missing():
        raise MissingData("encode() needs a table without missing cells; apply a missing-value policy first")
    cols, prov, empty = [], [], []
    outcome_col = -1
    for col in table.schema:
        arr = table.columns[col.name]
        if col.role is Role.OUTCOME:
            outcome_col = len(cols)
            if col.kind is Kind.CONTINUOUS:
                cols.append(arr.astype(np.float64))
                prov.append(ColumnProvenance(col.name, CONTINUOUS_TAG, strategy, True))
                continue
            cats = category_order(col)
            if len(cats) > 2:
                raise SchemaError(f"outcome {col.name!r} must be binary, has {len(cats)} categories")
            code = col.categories.index(cats[-1])
            cols.append((arr == code).astype(np.float64))
            prov.append(ColumnProvenance(col.name, cats[-1], strategy, True))
            continue
        if col.kind is Kind.CONTINUOUS:
            cols.append(arr.astype(np.float64))
            prov.append(ColumnProvenance(col.name, CONTINUOUS_TAG, strategy))
            continue
        for cat in _kept_categories(category_order(col), strategy):
            ind = (arr == col.categories.index(cat)).astype(np.float64)
            if not ind.any():
                name = f"{col.name}={cat}"
                if strict:
                    raise EmptyCategory(f"category {name!r} never occurs")
                log.warning("dropping indicator for empty category %s", name)
                empty.append(name)
                continue
            cols.append(ind)
            prov.append(ColumnProvenance(col.name, cat, strategy))
    data = np.column_stack(cols) if cols else np.zeros((table.n_rows, 0))
    return EncodedMatrix(data, prov, outcome_col, strategy, tuple(empty))


def sibling_groups(m: EncodedMatrix) -> list[list[int]]:
    """Column indices grouped by source feature, in column order."""
    groups: dict[str, list[int]] = {}
    for i, p in enumerate(m.provenance):
        groups.setdefault(p.source_feature, []).append(i)
    return list(groups.values())
