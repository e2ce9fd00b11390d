"""Synthetic ground truth: random SCMs, d-separation, sampling, metrics, benchmark."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .data import ColumnSchema, DataTable, Kind, Role
from .discovery import MatrixTest, fci
from .encoding import EncodingStrategy, encode
from .errors import NodeMismatch
from .graph import Pag, UnifiedGraph, classify


@dataclass(frozen=True)
class LinearGaussian:
    weights: Mapping[str, float] = field(default_factory=dict)
    noise_var: float = 1.0
    intercept: float = 0.0


@dataclass(frozen=True)
class Categorical:
    """CPT keyed by the tuple of parent category indices (in ``parents`` order)."""

    categories: tuple[str, ...]
    parents: tuple[str, ...] = ()
    cpt: Mapping[tuple[int, ...], Sequence[float]] = field(default_factory=dict)


@dataclass(frozen=True)
class GroundTruthDag:
    nodes: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]
    mechanisms: Mapping[str, LinearGaussian | Categorical] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(sorted(tuple(e) for e in self.edges)))
        known = set(self.nodes)
        if len(known) != len(self.nodes):
            raise ValueError("duplicate node names")
        for a, b in self.edges:
            if a not in known or b not in known:
                raise ValueError(f"edge {a}->{b} references an unknown node")
        self.topological_order()  # raises on cycles
        for v, mech in self.mechanisms.items():
            parents = set(self.parents(v))
            if isinstance(mech, LinearGaussian):
                if not set(mech.weights) <= parents:
                    raise ValueError(f"mechanism of {v} uses undeclared parents")
            else:
                if not set(mech.parents) <= parents:
                    raise ValueError(f"mechanism of {v} uses undeclared parents")
                for key, row in mech.cpt.items():
                    if len(row) != len(mech.categories) or abs(sum(row) - 1.0) > 1e-9:
                        raise ValueError(f"CPT row {key} of {v} does not sum to 1")

    def parents(self, v: str) -> list[str]:
        return sorted(a for a, b in self.edges if b == v)

    def children(self, v: str) -> list[str]:
        return sorted(b for a, b in self.edges if a == v)

    def topological_order(self) -> list[str]:
        indeg = {v: 0 for v in self.nodes}
        for _, b in self.edges:
            indeg[b] += 1
        ready = [v for v in self.nodes if indeg[v] == 0]
        order = []
        while ready:
            v = ready.pop(0)
            order.append(v)
            for c in self.children(v):
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
        if len(order) != len(self.nodes):
            raise ValueError("graph has a cycle")
        return order

    def ancestors(self, vs) -> set[str]:
        out = set(vs)
        stack = list(vs)
        while stack:
            v = stack.pop()
            for p in self.parents(v):
                if p not in out:
                    out.add(p)
                    stack.append(p)
        return out

    def skeleton(self) -> set[frozenset]:
        return {frozenset(e) for e in self.edges}


def random_dag(n_nodes: int, edge_prob: float, seed: int | None = None,
               weight_range: tuple[float, float] = (0.5, 2.0)) -> GroundTruthDag:
    """Linear-Gaussian DAG with edges from earlier to later positions of a random order.

    Weights are uniform on +/-[lo, hi] with random sign; noise variance 1.
    """
    if n_nodes < 1:
        raise ValueError("n_nodes must be >= 1")
    if not 0.0 <= edge_prob <= 1.0:
        raise ValueError("edge_prob must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    names = [f"X{i}" for i in range(n_nodes)]
    order = rng.permutation(n_nodes)
    edges = []
    weights: dict[str, dict[str, float]] = {v: {} for v in names}
    lo, hi = weight_range
    for i in range(n_nodes):
        for j in range(i + 1, n_nodes):
            if rng.random() < edge_prob:
                a, b = names[order[i]], names[order[j]]
                edges.append((a, b))
                w = rng.uniform(lo, hi) * (1.0 if rng.random() < 0.5 else -1.0)
                weights[b][a] = float(w)
    mechs = {v: LinearGaussian(weights[v], 1.0) for v in names}
    return GroundTruthDag(tuple(names), tuple(edges), mechs)


def d_separated(dag: GroundTruthDag, x, y, given=()) -> bool:
    """Bayes-ball reachability: True iff x and y are d-separated by ``given``."""
    xs = {x} if isinstance(x, str) else set(x)
    ys = {y} if isinstance(y, str) else set(y)
    z = set(given)
    if xs & z or ys & z:
        raise ValueError("conditioning set must exclude x and y")
    anc_z = dag.ancestors(z)
    parents = {v: dag.parents(v) for v in dag.nodes}
    children = {v: dag.children(v) for v in dag.nodes}
    # direction "up": arrived from a child; "down": arrived from a parent
    stack = [(v, "up") for v in xs]
    visited = set()
    while stack:
        v, d = stack.pop()
        if (v, d) in visited:
            continue
        visited.add((v, d))
        if v not in z and v in ys:
            return False
        if d == "up" and v not in z:
            stack.extend((p, "up") for p in parents[v])
            stack.extend((c, "down") for c in children[v])
        elif d == "down":
            if v not in z:
                stack.extend((c, "down") for c in children[v])
            if v in anc_z:
                stack.extend((p, "up") for p in parents[v])
    return True


class DSeparationOracle:
    """Independence queries answered exactly by d-separation in the true DAG.

    ``nodes`` may be a subset of the DAG's nodes; the rest act as latents.
    """

    def __init__(self, dag: GroundTruthDag, nodes: Sequence[str] | None = None):
        self.dag = dag
        self.nodes = list(nodes if nodes is not None else dag.nodes)
        self.n_tests = 0
        self._cache: dict = {}

    def independent(self, a, b, cond=()):
        key = (min(a, b), max(a, b), tuple(sorted(cond)))
        if key not in self._cache:
            self.n_tests += 1
            self._cache[key] = d_separated(self.dag, a, b, cond)
        return self._cache[key]


def sample(dag: GroundTruthDag, n_rows: int, seed: int | None = None, outcome: str | None = None) -> DataTable:
    """Ancestral sampling in topological order.

    The table needs one outcome column: ``outcome`` or else the last node in
    topological order gets that role.
    """
    rng = np.random.default_rng(seed)
    order = dag.topological_order()
    outcome = outcome if outcome is not None else order[-1]
    values: dict[str, np.ndarray] = {}
    for v in order:
        mech = dag.mechanisms.get(v, LinearGaussian())
        if isinstance(mech, LinearGaussian):
            col = mech.intercept + rng.normal(0.0, math.sqrt(mech.noise_var), n_rows)
            for p, w in sorted(mech.weights.items()):
                col = col + w * values[p]
            values[v] = col
        else:
            k = len(mech.categories)
            codes = np.zeros(n_rows, dtype=np.int64)
            u = rng.random(n_rows)
            keys = (
                list(zip(*(values[p].astype(np.int64) for p in mech.parents)))
                if mech.parents else [()] * n_rows
            )
            for i, key in enumerate(keys):
                cdf = np.cumsum(mech.cpt[tuple(int(c) for c in key)])
                codes[i] = min(int(np.searchsorted(cdf, u[i], side="right")), k - 1)
            values[v] = codes
    schema = []
    for v in dag.nodes:
        mech = dag.mechanisms.get(v, LinearGaussian())
        role = Role.OUTCOME if v == outcome else Role.FEATURE
        if isinstance(mech, Categorical):
            kind = Kind.BINARY if len(mech.categories) == 2 else Kind.CATEGORICAL
            schema.append(ColumnSchema(v, kind, mech.categories, role))
        else:
            schema.append(ColumnSchema(v, Kind.CONTINUOUS, (), role))
    return DataTable(tuple(schema), values)


def oracle_pag(dag: GroundTruthDag, nodes: Sequence[str] | None = None) -> Pag:
    """PAG the FCI engine produces from perfect independence information."""
    return fci(DSeparationOracle(dag, nodes))


def _pairs_and_marks(g: Pag | UnifiedGraph):
    if isinstance(g, Pag):
        return {frozenset((e.a, e.b)): e for e in g.edges()}
    return {frozenset((e.a, e.b)): e for e in g.edges}


def _edge_signature(e, a: str):
    """Comparable orientation of an edge seen from endpoint ``a``."""
    if hasattr(e, "mark_a"):
        return (e.mark_a, e.mark_b) if e.a == a else (e.mark_b, e.mark_a)
    return e.orientation if e.a == a else e.orientation.flipped()


def structural_metrics(estimated: Pag | UnifiedGraph, truth: GroundTruthDag,
                       reference: Pag | None = None) -> dict:
    """Skeleton precision/recall/F1 against the DAG and SHD against its PAG."""
    if set(estimated.nodes) != set(truth.nodes):
        raise NodeMismatch(
            f"node sets differ: {sorted(set(estimated.nodes) ^ set(truth.nodes))}"
        )
    est = _pairs_and_marks(estimated)
    true_pairs = truth.skeleton()
    tp = len(set(est) & true_pairs)
    precision = tp / len(est) if est else 1.0
    recall = tp / len(true_pairs) if true_pairs else 1.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0

    ref = reference if reference is not None else oracle_pag(truth)
    ref_edges = _pairs_and_marks(ref)
    shd = len(set(est) ^ set(ref_edges))
    for pair in set(est) & set(ref_edges):
        a = min(pair)
        e, r = est[pair], ref_edges[pair]
        if isinstance(estimated, Pag):
            if _edge_signature(e, a) != _edge_signature(r, a):
                shd += 1
        else:
            r_orient = classify(r)
            r_orient = r_orient if r.a == e.a else r_orient.flipped()
            if e.orientation is not r_orient:
                shd += 1
    return {"skeleton_precision": precision, "skeleton_recall": recall, "skeleton_f1": f1, "shd": shd}


@dataclass
class BenchInstance:
    index: int
    seed: int
    n_edges: int
    skeleton_precision: float
    skeleton_recall: float
    skeleton_f1: float
    shd: int
    n_tests: int
    seconds: float


@dataclass
class BenchReport:
    config: dict
    instances: list[BenchInstance]

    @property
    def aggregates(self) -> dict:
        if not self.instances:
            return {}
        cols = ["skeleton_precision", "skeleton_recall", "skeleton_f1", "shd"]
        out = {}
        for c in cols:
            vals = np.array([getattr(i, c) for i in self.instances], dtype=float)
            out[f"mean_{c}"] = float(vals.mean())
            out[f"min_{c}" if c != "shd" else "max_shd"] = float(vals.min() if c != "shd" else vals.max())
        out["exact_instances"] = sum(1 for i in self.instances if i.shd == 0)
        return out

    def to_json(self, timings: bool = False) -> str:
        rows = []
        for inst in self.instances:
            d = asdict(inst)
            if not timings:
                d.pop("seconds")
            rows.append(d)
        doc = {"config": self.config, "instances": rows, "aggregates": self.aggregates}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        fields = ["index", "seed", "n_edges", "skeleton_precision", "skeleton_recall", "skeleton_f1", "shd", "n_tests"]
        w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for inst in self.instances:
            d = asdict(inst)
            w.writerow({k: d[k] for k in fields})
        return buf.getvalue()

    def summary_table(self) -> str:
        agg = self.aggregates
        lines = [
            f"{'metric':<22}{'value':>10}",
            f"{'instances':<22}{len(self.instances):>10d}",
        ]
        for k in ("mean_skeleton_precision", "mean_skeleton_recall", "mean_skeleton_f1", "mean_shd", "max_shd"):
            lines.append(f"{k:<22}{agg.get(k, float('nan')):>10.3f}")
        lines.append(f"{'exact_instances':<22}{agg.get('exact_instances', 0):>10d}")
        return "\n".join(lines)


def instance_seeds(seed: int, instances: int) -> list[int]:
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(instances)]


def run_benchmark(n_nodes: int = 6, edge_prob: float = 0.3, n_rows: int = 5000, instances: int = 20,
                  seed: int = 0, alpha: float = 0.01, oracle: bool = False,
                  max_cond_size: int | None = None, threads: int = 1) -> BenchReport:
    """Seeded sweep of random linear-Gaussian SCMs through FCI."""
    if n_nodes < 1 or instances < 1 or n_rows < 4:
        raise ValueError("n_nodes, instances must be >= 1 and n_rows >= 4")
    if not 0.0 <= edge_prob <= 1.0 or not 0.0 < alpha < 1.0:
        raise ValueError("edge_prob must lie in [0, 1] and alpha in (0, 1)")
    config = {
        "n_nodes": n_nodes, "edge_prob": edge_prob, "n_rows": n_rows, "instances": instances,
        "seed": seed, "alpha": alpha, "oracle": oracle, "max_cond_size": max_cond_size,
    }
    out = []
    for i, s in enumerate(instance_seeds(seed, instances)):
        t0 = time.perf_counter()
        dag = random_dag(n_nodes, edge_prob, seed=s)
        reference = oracle_pag(dag)
        if oracle:
            query = DSeparationOracle(dag)
            est = fci(query, alpha, max_cond_size=max_cond_size, threads=threads)
            n_tests = query.n_tests
        else:
            m = encode(sample(dag, n_rows, seed=s), EncodingStrategy.DROP_FIRST)
            query = MatrixTest(m, alpha)
            est = fci(query, alpha, max_cond_size=max_cond_size, threads=threads)
            n_tests = query.n_tests
        met = structural_metrics(est, dag, reference)
        out.append(BenchInstance(i, s, len(dag.edges), met["skeleton_precision"], met["skeleton_recall"],
                                 met["skeleton_f1"], met["shd"], n_tests, time.perf_counter() - t0))
    return BenchReport(config, out)


def brute_force_d_separated(dag: GroundTruthDag, x: str, y: str, given=()) -> bool:
    """Path-enumeration d-separation (exponential; for checking small graphs)."""
    z = set(given)
    desc_or_self = {v: {w for w in dag.nodes if v in dag.ancestors([w])} for v in dag.nodes}
    nbrs = {v: set(dag.parents(v)) | set(dag.children(v)) for v in dag.nodes}
    edges = set(dag.edges)

    def blocked(path):
        for i in range(1, len(path) - 1):
            a, b, c = path[i - 1], path[i], path[i + 1]
            collider = (a, b) in edges and (c, b) in edges
            if collider:
                if not (desc_or_self[b] & z):
                    return True
            elif b in z:
                return True
        return False

    def walk(path):
        v = path[-1]
        if v == y:
            yield list(path)
            return
        for w in sorted(nbrs[v]):
            if w not in path:
                path.append(w)
                yield from walk(path)
                path.pop()

    return all(blocked(p) for p in walk([x]))


__all__ = [
    "BenchReport", "Categorical", "DSeparationOracle", "GroundTruthDag", "LinearGaussian",
    "brute_force_d_separated", "d_separated", "oracle_pag", "random_dag", "run_benchmark",
    "sample", "structural_metrics",
]
