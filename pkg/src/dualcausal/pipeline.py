"""End-to-end dual-encoding discovery: discretize, encode twice, FCI, merge, weight."""

from __future__ import annotations

import enum
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .data import DataTable, MissingPolicy, Role, apply_missing_policy
from .discovery import BackgroundKnowledge, MatrixTest, fci_search
from .discretize import BinSpec, apply_bins, fit_bins
from .encoding import CONTINUOUS_TAG, EncodedMatrix, EncodingStrategy, encode
from .errors import NameCollision, SchemaError, ZeroVariance
from .graph import Label, Orientation, graph_to_dict, Pag, Support, UnifiedEdge, UnifiedGraph, classify
from .stats import pearson_arrays

log = logging.getLogger(__name__)

DROP_FIRST = "drop-first"
DROP_LAST = "drop-last"


class EncodingMode(str, enum.Enum):
    DUAL = "dual"
    DROP_FIRST_ONLY = "drop-first"
    DROP_LAST_ONLY = "drop-last"
    # demonstration only: always fails on real categoricals
    FULL = "full"


@dataclass(frozen=True)
class PipelineConfig:
    outcome: str
    alpha: float = 0.01
    encoding_mode: EncodingMode = EncodingMode.DUAL
    discretize: bool = True
    max_cond_size: int | None = None
    missing_policy: MissingPolicy = MissingPolicy.DROP_ROWS
    threads: int = 1

    def __post_init__(self):
        object.__setattr__(self, "encoding_mode", EncodingMode(self.encoding_mode))
        object.__setattr__(self, "missing_policy", MissingPolicy(self.missing_policy))
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.max_cond_size is not None and self.max_cond_size < 0:
            raise ValueError("max_cond_size must be >= 0")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome,
            "alpha": self.alpha,
            "encoding_mode": self.encoding_mode.value,
            "discretize": self.discretize,
            "max_cond_size": self.max_cond_size,
            "missing_policy": self.missing_policy.value,
        }


@dataclass(frozen=True)
class MergeRow:
    a: str
    b: str
    present_in: tuple[str, ...]
    orientations: tuple[str, ...]
    orientation_conflict: bool
    resolution: str  # "kept" | "kept-undirected"

    def to_dict(self) -> dict:
        return {
            "a": self.a,
            "b": self.b,
            "present_in": list(self.present_in),
            "orientations": list(self.orientations),
            "orientation_conflict": self.orientation_conflict,
            "resolution": self.resolution,
        }


@dataclass
class MergeReport:
    rows: list[MergeRow]
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"edges": [r.to_dict() for r in self.rows], "warnings": list(self.warnings)}

    @property
    def n_conflicts(self) -> int:
        return sum(r.orientation_conflict for r in self.rows)


# --- preparation ------------------------------------------------------------

def prepare_table(table: DataTable, cfg: PipelineConfig) -> tuple[DataTable, list[BinSpec]]:
    """Missing-value policy, outcome check and (optionally) MDLP binning."""
    out = table.column(cfg.outcome)
    if out.role is not Role.OUTCOME:
        raise SchemaError(f"column {cfg.outcome!r} is not declared as the outcome")
    if table.has_missing():
        table = apply_missing_policy(table, cfg.missing_policy)
    specs: list[BinSpec] = []
    if cfg.discretize:
        # a feature without any accepted cut would collapse to a constant
        # column; it stays continuous instead
        specs = [s for s in fit_bins(table) if s.cut_points]
        table = apply_bins(table, specs)
    return table, specs


def _strategies(mode: EncodingMode) -> list[EncodingStrategy]:
    return {
        EncodingMode.DUAL: [EncodingStrategy.DROP_FIRST, EncodingStrategy.DROP_LAST],
        EncodingMode.DROP_FIRST_ONLY: [EncodingStrategy.DROP_FIRST],
        EncodingMode.DROP_LAST_ONLY: [EncodingStrategy.DROP_LAST],
        EncodingMode.FULL: [EncodingStrategy.FULL],
    }[mode]


def _discover(m: EncodedMatrix, cfg: PipelineConfig) -> Pag:
    bk = BackgroundKnowledge(m.outcome_name)
    query = MatrixTest(m, cfg.alpha)
    res = fci_search(query, cfg.alpha, bk, cfg.max_cond_size, threads=cfg.threads)
    log.info("%s: %d nodes, %d edges, %d CI tests", m.strategy.value, len(res.pag.nodes),
             res.pag.n_edges(), query.n_tests)
    return res.pag


@dataclass
class DualRun:
    table: DataTable
    bins: list[BinSpec]
    matrices: dict[str, EncodedMatrix]
    pags: dict[str, Pag]


def run_dual_discovery(table: DataTable, cfg: PipelineConfig) -> DualRun:
    """FCI on each encoding of the prepared table; keys are strategy names."""
    prepared, specs = prepare_table(table, cfg)
    strategies = _strategies(cfg.encoding_mode)
    matrices = {s.value: encode(prepared, s) for s in strategies}
    if len(strategies) > 1 and cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=len(strategies)) as pool:
            pags = list(pool.map(lambda s: _discover(matrices[s.value], cfg), strategies))
    else:
        pags = [_discover(matrices[s.value], cfg) for s in strategies]
    return DualRun(prepared, specs, matrices, {s.value: g for s, g in zip(strategies, pags)})


# --- merging ----------------------------------------------------------------

def _merged_provenance(graphs) -> dict:
    prov: dict = {}
    for g in graphs:
        for name, p in g.provenance.items():
            p = tuple(p)
            if name in prov and prov[name] != p:
                raise NameCollision(f"node {name!r} has provenance {prov[name]} and {p}")
            prov[name] = p
    return prov


def merge(g1: Pag | None, g2: Pag | None, labels: tuple[str, str] = (DROP_FIRST, DROP_LAST)):
    """Union of two PAGs with orientation consistency.

    Each PAG edge collapses to a->b, b->a or undirected.  An edge present in
    both graphs keeps its orientation when they agree and becomes undirected
    when they do not; an edge present in one graph keeps that graph's
    orientation.  Returns ``(UnifiedGraph, MergeReport)``.
    """
    graphs = [(lab, g) for lab, g in zip(labels, (g1, g2)) if g is not None]
    if not graphs:
        raise ValueError("merge needs at least one graph")
    prov = _merged_provenance(g for _, g in graphs)
    nodes = sorted(set().union(*(g.nodes for _, g in graphs)))
    seen: dict[tuple[str, str], dict[str, Orientation]] = {}
    for lab, g in graphs:
        for e in g.edges():
            a, b = sorted((e.a, e.b))
            o = classify(e)
            if (a, b) != (e.a, e.b):
                o = o.flipped()
            seen.setdefault((a, b), {})[lab] = o
    support_of = {
        (labels[0],): Support.DROP_FIRST_ONLY,
        (labels[1],): Support.DROP_LAST_ONLY,
        labels: Support.BOTH,
    }
    edges, rows = [], []
    for (a, b), by_label in sorted(seen.items()):
        present = tuple(lab for lab in labels if lab in by_label)
        orients = [by_label[lab] for lab in present]
        conflict = len(set(orients)) > 1
        orient = Orientation.UNDIRECTED if conflict else orients[0]
        edges.append(UnifiedEdge(a, b, orient, support_of[present]))
        rows.append(MergeRow(a, b, present, tuple(o.value for o in orients), conflict,
                             "kept-undirected" if conflict else "kept"))
    return UnifiedGraph(tuple(nodes), tuple(edges), prov), MergeReport(rows)


# --- weighting --------------------------------------------------------------

def node_column(table: DataTable, source_feature: str, category: str) -> np.ndarray:
    """0/1 indicator (or raw values for continuous nodes) over the table rows."""
    col = table.column(source_feature)
    arr = table.columns[source_feature]
    if category == CONTINUOUS_TAG:
        return arr.astype(np.float64)
    if not col.is_categorical:
        raise SchemaError(f"node {source_feature}={category} refers to a continuous column")
    try:
        code = col.categories.index(category)
    except ValueError:
        raise SchemaError(f"{category!r} is not a category of {source_feature!r}") from None
    return (arr == code).astype(np.float64)


def weight(g: UnifiedGraph, table: DataTable, siblings=None) -> UnifiedGraph:
    """Pearson weight and supportive/opposing label for every edge.

    Columns come from the post-discretization table, so reference categories
    dropped by one encoding still have an indicator.  Edges between two
    nodes of the same source feature (``siblings``: iterable of node-name
    groups, by default grouped by provenance) get weight -1 exactly.
    Weight 0 is labelled supportive.
    """
    if siblings is None:
        group_of = {v: g.provenance[v][0] for v in g.nodes if v in g.provenance}
    else:
        group_of = {v: i for i, grp in enumerate(siblings) for v in grp}
    cache: dict[str, np.ndarray] = {}

    def column(v):
        if v not in cache:
            if v not in g.provenance:
                raise SchemaError(f"node {v!r} has no provenance; cannot weight it")
            cache[v] = node_column(table, *g.provenance[v])
        return cache[v]

    edges = []
    for e in g.edges:
        if e.a in group_of and group_of.get(e.a) == group_of.get(e.b):
            w = -1.0
        else:
            try:
                w = pearson_arrays(column(e.a), column(e.b))
            except ZeroVariance:
                raise ZeroVariance(f"edge {e.a!r}-{e.b!r}: a node column is constant") from None
        label = Label.OPPOSING if w < 0 else Label.SUPPORTIVE
        edges.append(UnifiedEdge(e.a, e.b, e.orientation, e.support, w, label))
    return UnifiedGraph(g.nodes, tuple(edges), g.provenance)


# --- full run ---------------------------------------------------------------

@dataclass
class PipelineResult:
    unified: UnifiedGraph
    report: MergeReport
    run: DualRun
    config: PipelineConfig

    @property
    def pags(self) -> dict[str, Pag]:
        return self.run.pags

    @property
    def bins(self) -> list[BinSpec]:
        return self.run.bins

    def counts(self) -> dict:
        c = self.unified.counts()
        c["feature_nodes"] = sum(1 for v in self.unified.nodes if self.unified.provenance.get(v, (None,))[0] != self.config.outcome)
        c["rows"] = self.run.table.n_rows
        c["orientation_conflicts"] = self.report.n_conflicts
        return c


def run_pipeline(table: DataTable, cfg: PipelineConfig) -> PipelineResult:
    run = run_dual_discovery(table, cfg)
    pags = [run.pags.get(DROP_FIRST), run.pags.get(DROP_LAST)]
    if cfg.encoding_mode is EncodingMode.FULL:
        pags = [run.pags["full"], None]
    unified, report = merge(*pags)
    unified = weight(unified, run.table)
    for e in unified.edges:
        if e.weight == 0.0:
            report.warnings.append(f"zero weight on {e.a} - {e.b}; labelled supportive")
    return PipelineResult(unified, report, run, cfg)


def manifest(result: PipelineResult, timestamp: str | None = None) -> dict:
    """Everything needed to re-derive the graphs: config, bins, PAGs, merge, counts."""
    doc = {
        "config": result.config.to_dict(),
        "bins": [b.to_dict() for b in result.bins],
        "pags": {k: graph_to_dict(g) for k, g in sorted(result.pags.items())},
        "merge_report": result.report.to_dict(),
        "unified_graph": graph_to_dict(result.unified),
        "counts": result.counts(),
    }
    if timestamp is not None:
        doc["timestamp"] = timestamp
    return doc
