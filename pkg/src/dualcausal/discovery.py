"""Constraint-based search: stable skeleton, colliders, Possible-D-SEP, FCI rules.

The engine talks to an independence query object exposing ``nodes`` (list of
names) and ``independent(a, b, cond) -> bool`` over node names.  A Fisher-z
test on an encoded matrix and the d-separation oracle both fit.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Protocol

from .encoding import EncodedMatrix
from .errors import SingularCovariance, SingularityAbort, TooFewSamples
from .graph import Mark, Pag
from .stats import FisherZTest

log = logging.getLogger(__name__)


class IndependenceQuery(Protocol):
    nodes: list[str]

    def independent(self, a: str, b: str, cond: tuple[str, ...]) -> bool: ...


class MatrixTest:
    """Fisher-z queries over the named columns of an encoded matrix."""

    def __init__(self, m: EncodedMatrix, alpha: float = 0.01, backend: str | None = None):
        self.matrix = m
        self.nodes = list(m.names)
        self._index = {v: i for i, v in enumerate(self.nodes)}
        self.test = FisherZTest(m, alpha, backend=backend)
        self.provenance = {p.node_name: (p.source_feature, p.category) for p in m.provenance}

    def independent(self, a, b, cond=()):
        ix = self._index
        try:
            return self.test(ix[a], ix[b], tuple(ix[c] for c in cond))
        except SingularCovariance:
            raise SingularityAbort(ix[a], ix[b], [ix[c] for c in cond], names=(a, b, tuple(cond))) from None

    @property
    def n_tests(self) -> int:
        return self.test.n_tests


@dataclass(frozen=True)
class BackgroundKnowledge:
    """The outcome as a sink: no edge may point out of it."""

    sink_node: str | None = None

    def forbidden_edges(self, nodes: Iterable[str]) -> set[tuple[str, str]]:
        if self.sink_node is None:
            return set()
        return {(self.sink_node, v) for v in nodes if v != self.sink_node}


@dataclass
class SepsetTable:
    _sets: dict = field(default_factory=dict)

    def set(self, a: str, b: str, cond) -> None:
        self._sets[frozenset((a, b))] = tuple(sorted(cond))

    def get(self, a: str, b: str):
        return self._sets.get(frozenset((a, b)))

    def __contains__(self, pair) -> bool:
        return frozenset(pair) in self._sets

    def items(self):
        for k, v in sorted(self._sets.items(), key=lambda kv: sorted(kv[0])):
            yield tuple(sorted(k)), v

    def copy(self) -> "SepsetTable":
        return SepsetTable(dict(self._sets))

    def to_dict(self) -> dict:
        return {" | ".join(k): list(v) for k, v in self.items()}


def _as_query(source, alpha: float) -> IndependenceQuery:
    if isinstance(source, EncodedMatrix):
        return MatrixTest(source, alpha)
    return source


def _map(fn, items, threads: int):
    if threads is None or threads <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def skeleton(source, alpha: float = 0.01, max_cond_size: int | None = None,
             bk: BackgroundKnowledge | None = None, threads: int = 1):
    """Adjacency search with neighbourhoods frozen per depth (PC-stable).

    Returns ``(pag, sepsets)`` where every edge of ``pag`` is o-o.  Pairs are
    visited in sorted name order and conditioning sets in lexicographic order,
    so the result does not depend on the input column order.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    query = _as_query(source, alpha)
    nodes = sorted(query.nodes)
    if bk is not None and bk.sink_node is not None and bk.sink_node not in nodes:
        raise ValueError(f"sink node {bk.sink_node!r} is not a variable")
    g = Pag.complete(nodes, Mark.CIRCLE, getattr(query, "provenance", None))
    sepsets = SepsetTable()
    depth = 0
    while max_cond_size is None or depth <= max_cond_size:
        adj = {v: g.neighbors(v) for v in nodes}
        pairs = [(a, b) for a in nodes for b in adj[a] if a < b]
        if not any(len(adj[a]) - 1 >= depth or len(adj[b]) - 1 >= depth for a, b in pairs):
            break

        def search(pair, depth=depth, adj=adj):
            a, b = pair
            for side, other in ((a, b), (b, a)):
                cands = [v for v in adj[side] if v != other]
                if len(cands) < depth:
                    continue
                for cond in combinations(cands, depth):
                    if query.independent(a, b, cond):
                        return cond
            return None

        try:
            found = _map(search, pairs, threads)
        except TooFewSamples:
            log.warning("stopping adjacency search at depth %d: too few samples", depth)
            break
        for (a, b), cond in zip(pairs, found):
            if cond is not None:
                g.remove_edge(a, b)
                sepsets.set(a, b, cond)
        log.debug("depth %d: %d edges remain", depth, g.n_edges())
        depth += 1
    return g, sepsets


def _apply_sink(g: Pag, bk: BackgroundKnowledge | None) -> None:
    if bk is None or bk.sink_node is None:
        return
    s = bk.sink_node
    for v in g.neighbors(s):
        g.set_mark(v, s, Mark.ARROW)
        g.set_mark(s, v, Mark.TAIL)


def orient_colliders(skel: Pag, sepsets: SepsetTable, bk: BackgroundKnowledge | None = None) -> Pag:
    """Reset marks to circles, fix the sink edges, orient unshielded colliders.

    Every edge at the sink becomes ``v --> sink``.  For each unshielded
    triple a - b - c with b outside sepset(a, c), both edges get an
    arrowhead at b wherever the mark is still a circle; arrowheads are never
    removed, so conflicting triples leave both arrowheads in place.
    """
    g = skel.copy()
    for e in g.edges():
        g.set_mark(e.a, e.b, Mark.CIRCLE)
        g.set_mark(e.b, e.a, Mark.CIRCLE)
    _apply_sink(g, bk)
    for b in sorted(g.nodes):
        nbrs = g.neighbors(b)
        for a, c in combinations(nbrs, 2):
            if g.is_adjacent(a, c):
                continue
            sep = sepsets.get(a, c) or ()
            if b not in sep:
                _set_if_circle(g, a, b, Mark.ARROW)
                _set_if_circle(g, c, b, Mark.ARROW)
    return g


def _set_if_circle(g: Pag, a: str, b: str, mark: Mark) -> bool:
    """Set the mark at b on edge a-b if it is still a circle."""
    if g.mark(a, b) is Mark.CIRCLE and mark is not Mark.CIRCLE:
        g.set_mark(a, b, mark)
        return True
    return False


def _rule1(g: Pag) -> bool:
    changed = False
    for b in sorted(g.nodes):
        for a in g.neighbors(b):
            if not g.into(a, b):
                continue
            for c in g.neighbors(b):
                if c == a or g.is_adjacent(a, c) or g.mark(c, b) is not Mark.CIRCLE:
                    continue
                changed |= _set_if_circle(g, c, b, Mark.TAIL)
                changed |= _set_if_circle(g, b, c, Mark.ARROW)
    return changed


def _rule2(g: Pag) -> bool:
    changed = False
    for a in sorted(g.nodes):
        for c in g.neighbors(a):
            if g.mark(a, c) is not Mark.CIRCLE:
                continue
            for b in g.neighbors(a):
                if b == c or not g.is_adjacent(b, c):
                    continue
                if (g.directed(a, b) and g.into(b, c)) or (g.into(a, b) and g.directed(b, c)):
                    changed |= _set_if_circle(g, a, c, Mark.ARROW)
                    break
    return changed


def _rule3(g: Pag) -> bool:
    changed = False
    for b in sorted(g.nodes):
        nbrs = g.neighbors(b)
        for a, c in combinations(nbrs, 2):
            if g.is_adjacent(a, c) or not (g.into(a, b) and g.into(c, b)):
                continue
            for d in nbrs:
                if d in (a, c) or g.mark(d, b) is not Mark.CIRCLE:
                    continue
                if not (g.is_adjacent(d, a) and g.is_adjacent(d, c)):
                    continue
                if g.mark(a, d) is Mark.CIRCLE and g.mark(c, d) is Mark.CIRCLE:
                    changed |= _set_if_circle(g, d, b, Mark.ARROW)
    return changed


def _discriminating_origin(g: Pag, a: str, b: str, c: str):
    """Start node of a discriminating path <theta, ..., a, b, c> for b, or None.

    Every node strictly between theta and b must be a collider on the path
    and a parent of c; theta must not be adjacent to c.
    """
    # queue holds (node, its successor on the path towards b); the node is a
    # collider candidate already known to be a parent of c
    queue = [(a, b)]
    visited = {a, b, c}
    head = 0
    while head < len(queue):
        u, _succ = queue[head]
        head += 1
        for w in g.neighbors(u):
            if w in visited or not g.into(w, u):
                continue
            if not g.is_adjacent(w, c):
                return w
            if g.directed(w, c) and g.into(u, w):
                visited.add(w)
                queue.append((w, u))
    return None


def _rule4(g: Pag, sepsets: SepsetTable) -> bool:
    changed = False
    for b in sorted(g.nodes):
        for c in g.neighbors(b):
            if g.mark(c, b) is not Mark.CIRCLE:
                continue
            for a in g.neighbors(b):
                if a == c or not g.is_adjacent(a, c):
                    continue
                if not (g.into(b, a) and g.directed(a, c)):
                    continue
                theta = _discriminating_origin(g, a, b, c)
                if theta is None:
                    continue
                sep = sepsets.get(theta, c) or ()
                if b in sep:
                    changed |= _set_if_circle(g, c, b, Mark.TAIL)
                    changed |= _set_if_circle(g, b, c, Mark.ARROW)
                else:
                    changed |= _set_if_circle(g, a, b, Mark.ARROW)
                    changed |= _set_if_circle(g, c, b, Mark.ARROW)
                    changed |= _set_if_circle(g, b, c, Mark.ARROW)
                if g.mark(c, b) is not Mark.CIRCLE:
                    break
    return changed


def orient_fci_rules(pag: Pag, sepsets: SepsetTable | None = None) -> Pag:
    """Apply rules R1-R4 until nothing changes.  Only circles are ever replaced."""
    g = pag.copy()
    sepsets = sepsets if sepsets is not None else SepsetTable()
    while True:
        changed = _rule1(g)
        changed |= _rule2(g)
        changed |= _rule3(g)
        changed |= _rule4(g, sepsets)
        if not changed:
            return g


def possible_d_sep(g: Pag, x: str) -> set[str]:
    """Nodes reachable from x along paths whose every inner triple is a
    collider or a triangle."""
    pds = set()
    seen = set()
    frontier = [(x, v) for v in g.neighbors(x)]
    for _, v in frontier:
        pds.add(v)
    while frontier:
        nxt = []
        for u, v in frontier:
            if (u, v) in seen:
                continue
            seen.add((u, v))
            for w in g.neighbors(v):
                if w == u or w == x:
                    continue
                if (g.into(u, v) and g.into(w, v)) or g.is_adjacent(u, w):
                    pds.add(w)
                    if (v, w) not in seen:
                        nxt.append((v, w))
        frontier = nxt
    pds.discard(x)
    return pds


def _pds_stage(g: Pag, sepsets: SepsetTable, query, max_cond_size, threads) -> bool:
    pds = {v: possible_d_sep(g, v) for v in g.nodes}
    pairs = [(e.a, e.b) for e in g.edges()]

    def search(pair):
        a, b = pair
        for side in (a, b):
            pool = sorted(pds[side] - {a, b})
            top = len(pool) if max_cond_size is None else min(len(pool), max_cond_size)
            for size in range(1, top + 1):
                for cond in combinations(pool, size):
                    if query.independent(a, b, cond):
                        return cond
        return None

    removed = False
    for (a, b), cond in zip(pairs, _map(search, pairs, threads)):
        if cond is not None:
            g.remove_edge(a, b)
            sepsets.set(a, b, cond)
            removed = True
    return removed


@dataclass
class FciResult:
    pag: Pag
    sepsets: SepsetTable
    n_tests: int | None = None


def fci(source, alpha: float = 0.01, bk: BackgroundKnowledge | None = None,
        max_cond_size: int | None = None, threads: int = 1) -> Pag:
    """FCI search returning a PAG; see ``fci_search`` for the sepsets too."""
    return fci_search(source, alpha, bk, max_cond_size, threads).pag


def fci_search(source, alpha: float = 0.01, bk: BackgroundKnowledge | None = None,
               max_cond_size: int | None = None, threads: int = 1) -> FciResult:
    query = _as_query(source, alpha)
    skel, sepsets = skeleton(query, alpha, max_cond_size, bk, threads)
    pag = orient_colliders(skel, sepsets, bk)
    if _pds_stage(pag, sepsets, query, max_cond_size, threads):
        log.debug("Possible-D-SEP stage removed edges; re-orienting")
    pag = orient_colliders(pag, sepsets, bk)
    pag = orient_fci_rules(pag, sepsets)
    return FciResult(pag, sepsets, getattr(query, "n_tests", None))
