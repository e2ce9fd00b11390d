"""Supervised entropy-based discretization (Fayyad-Irani MDLP).

Cut points are midpoints between consecutive distinct values.  Intervals are
left-closed/right-open and the last bin is open-ended: ``[lo,hi)`` ...
``[lo,inf)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data import ColumnSchema, DataTable, Kind, MISSING_CODE
from .errors import DegenerateInput, ParseError, SpecMismatch

# tolerance for treating two information gains as tied
_GAIN_TIE = 1e-12


def _fmt(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(float(x), "g")


@dataclass(frozen=True)
class BinSpec:
    source_feature: str
    cut_points: tuple[float, ...]
    lower: float = -math.inf

    def __post_init__(self):
        cuts = tuple(float(c) for c in self.cut_points)
        if any(not math.isfinite(c) for c in cuts):
            raise ValueError("cut points must be finite")
        if any(b <= a for a, b in zip(cuts, cuts[1:])):
            raise ValueError(f"cut points must be strictly increasing: {cuts}")
        object.__setattr__(self, "cut_points", cuts)
        object.__setattr__(self, "lower", float(self.lower))

    @property
    def n_bins(self) -> int:
        return len(self.cut_points) + 1

    @property
    def bin_labels(self) -> list[str]:
        edges = [self.lower, *self.cut_points, math.inf]
        return [f"[{_fmt(lo)},{_fmt(hi)})" for lo, hi in zip(edges, edges[1:])]

    def assign(self, values) -> np.ndarray:
        """Bin index of each value (left-closed intervals); nan maps to -1."""
        values = np.asarray(values, dtype=np.float64)
        idx = np.searchsorted(np.asarray(self.cut_points), values, side="right")
        idx = idx.astype(np.int64)
        idx[np.isnan(values)] = MISSING_CODE
        return idx

    def to_dict(self) -> dict:
        d = {"feature": self.source_feature, "cut_points": list(self.cut_points)}
        if math.isfinite(self.lower):
            d["lower"] = self.lower
        return d

    @classmethod
    def from_dict(cls, d) -> "BinSpec":
        try:
            return cls(d["feature"], tuple(d["cut_points"]), d.get("lower", -math.inf))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"invalid bin spec: {exc}") from None


def bins_to_json(specs: Sequence[BinSpec]) -> str:
    return json.dumps([s.to_dict() for s in specs], indent=2, sort_keys=True) + "\n"


def bins_from_json(text: str) -> list[BinSpec]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.pos) from None
    if not isinstance(doc, list):
        raise ParseError("expected a JSON list of bin specs", 0)
    return [BinSpec.from_dict(d) for d in doc]


def _entropy(counts: np.ndarray) -> np.ndarray:
    """Shannon entropy in bits along the last axis of a count array."""
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum(axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(total > 0, counts / total, 0.0)
        terms = np.where(p > 0, p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
    return -terms.sum(axis=-1)


def mdl_threshold(left: np.ndarray, right: np.ndarray) -> float:
    """Minimum gain a cut must exceed under the Fayyad-Irani MDL criterion."""
    whole = left + right
    n = whole.sum()
    k = np.count_nonzero(whole)
    k1 = np.count_nonzero(left)
    k2 = np.count_nonzero(right)
    delta = math.log2(3**k - 2) - (k * _entropy(whole) - k1 * _entropy(left) - k2 * _entropy(right))
    return float((math.log2(n - 1) + delta) / n)


def information_gain(left: np.ndarray, right: np.ndarray) -> float:
    whole = left + right
    n = whole.sum()
    return float(_entropy(whole) - (left.sum() * _entropy(left) + right.sum() * _entropy(right)) / n)


def _best_cut(block_counts: np.ndarray):
    """Best boundary over a run of value blocks; returns (index, gain) or None.

    Boundary t separates blocks [:t] and [t:].  Only boundaries where the two
    adjacent blocks have different relative class frequencies are candidates.
    """
    m = len(block_counts)
    if m < 2:
        return None
    rel = block_counts / block_counts.sum(axis=1, keepdims=True)
    differs = np.any(np.abs(rel[1:] - rel[:-1]) > 1e-15, axis=1)
    cand = np.flatnonzero(differs) + 1
    if cand.size == 0:
        return None
    cum = np.cumsum(block_counts, axis=0)
    total = cum[-1]
    left = cum[cand - 1]
    right = total - left
    n = total.sum()
    nl = left.sum(axis=1)
    gains = _entropy(total) - (nl * _entropy(left) + (n - nl) * _entropy(right)) / n
    best = gains.max()
    pick = int(np.flatnonzero(gains >= best - _GAIN_TIE)[0])
    return int(cand[pick]), float(gains[pick])


def mdlp_discretize(values, labels, source_feature: str = "") -> BinSpec:
    """Recursive entropy-minimizing binary splits with the MDL stopping rule."""
    values = np.asarray(values, dtype=np.float64)
    labels = np.asarray(labels)
    if values.shape != labels.shape:
        raise DegenerateInput("values and labels differ in length")
    keep = np.isfinite(values)
    values, labels = values[keep], labels[keep]
    if len(values) < 2:
        raise DegenerateInput("need at least two finite values")
    uniq, inv = np.unique(values, return_inverse=True)
    if len(uniq) < 2:
        raise DegenerateInput("all values identical")
    _, cls = np.unique(labels, return_inverse=True)
    counts = np.zeros((len(uniq), cls.max() + 1), dtype=np.int64)
    np.add.at(counts, (inv, cls), 1)

    cuts = []
    stack = [(0, len(uniq))]
    while stack:
        lo, hi = stack.pop()
        seg = counts[lo:hi]
        found = _best_cut(seg)
        if found is None:
            continue
        t, gain = found
        left = seg[:t].sum(axis=0)
        right = seg[t:].sum(axis=0)
        if not gain > mdl_threshold(left, right):
            continue
        cuts.append((uniq[lo + t - 1] + uniq[lo + t]) / 2.0)
        stack.append((lo + t, hi))
        stack.append((lo, lo + t))
    return BinSpec(source_feature, tuple(sorted(cuts)), float(uniq[0]))


def fit_bins(table: DataTable, features: Sequence[str] | None = None) -> list[BinSpec]:
    """MDLP bin specs for continuous features against the table's outcome."""
    outcome = table.outcome
    y = table.columns[outcome.name]
    if features is None:
        features = [c.name for c in table.schema if c.kind is Kind.CONTINUOUS and c is not outcome]
    specs = []
    for name in features:
        x = table.columns[name]
        ok = np.isfinite(x) & (y != MISSING_CODE if outcome.is_categorical else np.isfinite(y))
        specs.append(mdlp_discretize(x[ok], y[ok], source_feature=name))
    return specs


def apply_bins(table: DataTable, specs: Sequence[BinSpec]) -> DataTable:
    """Replace each binned continuous column by a categorical column of bins."""
    by_name = {}
    for s in specs:
        try:
            col = table.column(s.source_feature)
        except Exception:
            raise SpecMismatch(f"bin spec for unknown column {s.source_feature!r}") from None
        if col.kind is not Kind.CONTINUOUS:
            raise SpecMismatch(f"bin spec for non-continuous column {s.source_feature!r}")
        by_name[s.source_feature] = s
    schema, columns = [], {}
    for col in table.schema:
        spec = by_name.get(col.name)
        if spec is None:
            schema.append(col)
            continue
        schema.append(ColumnSchema(col.name, Kind.CATEGORICAL, tuple(spec.bin_labels), col.role))
        columns[col.name] = spec.assign(table.columns[col.name])
    return table.replace(schema, columns)
