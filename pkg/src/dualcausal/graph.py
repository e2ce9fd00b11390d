"""Partial ancestral graphs, unified weighted graphs, DOT and JSON I/O."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

from .errors import ParseError


class Mark(str, enum.Enum):
    TAIL = "tail"
    ARROW = "arrow"
    CIRCLE = "circle"


class Orientation(str, enum.Enum):
    A_TO_B = "a->b"
    B_TO_A = "b->a"
    UNDIRECTED = "undirected"

    def flipped(self) -> "Orientation":
        if self is Orientation.A_TO_B:
            return Orientation.B_TO_A
        if self is Orientation.B_TO_A:
            return Orientation.A_TO_B
        return self


class Label(str, enum.Enum):
    SUPPORTIVE = "supportive"
    OPPOSING = "opposing"


class Support(str, enum.Enum):
    BOTH = "both"
    DROP_FIRST_ONLY = "drop-first-only"
    DROP_LAST_ONLY = "drop-last-only"


@dataclass(frozen=True)
class PagEdge:
    a: str
    b: str
    mark_a: Mark
    mark_b: Mark

    def __str__(self):
        left = {Mark.TAIL: "-", Mark.ARROW: "<", Mark.CIRCLE: "o"}[self.mark_a]
        right = {Mark.TAIL: "-", Mark.ARROW: ">", Mark.CIRCLE: "o"}[self.mark_b]
        return f"{self.a} {left}-{right} {self.b}"


class Pag:
    """Graph with one edge per unordered node pair and a mark at each end.

    ``mark(a, b)`` is the mark at ``b`` on the edge between ``a`` and ``b``.
    """

    def __init__(self, nodes: Iterable[str], provenance: Mapping[str, tuple[str, str]] | None = None):
        nodes = tuple(nodes)
        if len(set(nodes)) != len(nodes):
            raise ValueError("node names must be unique")
        self.nodes = nodes
        self.provenance = dict(provenance or {})
        self._adj: dict[str, dict[str, Mark]] = {v: {} for v in nodes}

    # construction -------------------------------------------------------
    @classmethod
    def complete(cls, nodes, mark: Mark = Mark.CIRCLE, provenance=None) -> "Pag":
        g = cls(nodes, provenance)
        for i, a in enumerate(g.nodes):
            for b in g.nodes[i + 1:]:
                g.add_edge(a, b, mark, mark)
        return g

    def copy(self) -> "Pag":
        g = Pag(self.nodes, self.provenance)
        g._adj = {v: dict(nb) for v, nb in self._adj.items()}
        return g

    def add_edge(self, a: str, b: str, mark_a: Mark = Mark.CIRCLE, mark_b: Mark = Mark.CIRCLE) -> None:
        if a == b:
            raise ValueError("self-loops are not allowed")
        if a not in self._adj or b not in self._adj:
            raise KeyError(f"unknown node in edge ({a!r}, {b!r})")
        self._adj[a][b] = Mark(mark_b)
        self._adj[b][a] = Mark(mark_a)

    def remove_edge(self, a: str, b: str) -> None:
        del self._adj[a][b]
        del self._adj[b][a]

    # queries ------------------------------------------------------------
    def is_adjacent(self, a: str, b: str) -> bool:
        return b in self._adj[a]

    def neighbors(self, a: str) -> list[str]:
        return sorted(self._adj[a])

    def mark(self, a: str, b: str) -> Mark:
        """Mark at ``b`` on edge a-b."""
        return self._adj[a][b]

    def set_mark(self, a: str, b: str, mark: Mark) -> None:
        if b not in self._adj[a]:
            raise KeyError(f"no edge between {a!r} and {b!r}")
        self._adj[a][b] = Mark(mark)

    def edge(self, a: str, b: str) -> PagEdge:
        return PagEdge(a, b, self._adj[b][a], self._adj[a][b])

    def edges(self) -> list[PagEdge]:
        out = []
        for a in sorted(self._adj):
            for b in sorted(self._adj[a]):
                if a < b:
                    out.append(self.edge(a, b))
        return out

    def __iter__(self) -> Iterator[PagEdge]:
        return iter(self.edges())

    def n_edges(self) -> int:
        return sum(len(nb) for nb in self._adj.values()) // 2

    # arrowhead helpers used by the orientation rules
    def into(self, a: str, b: str) -> bool:
        """a *-> b"""
        return self._adj[a].get(b) is Mark.ARROW

    def directed(self, a: str, b: str) -> bool:
        """a --> b"""
        return self._adj[a].get(b) is Mark.ARROW and self._adj[b].get(a) is Mark.TAIL

    def __eq__(self, other):
        if not isinstance(other, Pag):
            return NotImplemented
        return (
            sorted(self.nodes) == sorted(other.nodes)
            and self.edges() == other.edges()
            and self.provenance == other.provenance
        )

    __hash__ = None

    def __repr__(self):
        return f"Pag(nodes={len(self.nodes)}, edges=[{', '.join(map(str, self.edges()))}])"


@dataclass(frozen=True)
class UnifiedEdge:
    a: str
    b: str
    orientation: Orientation
    support: Support
    weight: float | None = None
    label: Label | None = None

    def canonical(self) -> "UnifiedEdge":
        if self.a <= self.b:
            return self
        return UnifiedEdge(self.b, self.a, self.orientation.flipped(), self.support, self.weight, self.label)

    def __str__(self):
        arrow = {Orientation.A_TO_B: "-->", Orientation.B_TO_A: "<--", Orientation.UNDIRECTED: "---"}[self.orientation]
        w = "" if self.weight is None else f" ({self.weight:+.3f})"
        return f"{self.a} {arrow} {self.b}{w}"


@dataclass(frozen=True)
class UnifiedGraph:
    nodes: tuple[str, ...]
    edges: tuple[UnifiedEdge, ...]
    provenance: Mapping[str, tuple[str, str]] = field(default_factory=dict)

    def __post_init__(self):
        nodes = tuple(sorted(set(self.nodes)))
        if len(nodes) != len(self.nodes):
            raise ValueError("node names must be unique")
        edges = tuple(sorted((e.canonical() for e in self.edges), key=lambda e: (e.a, e.b)))
        seen = set()
        for e in edges:
            if e.a == e.b:
                raise ValueError("self-loops are not allowed")
            if (e.a, e.b) in seen:
                raise ValueError(f"duplicate edge {e.a!r}-{e.b!r}")
            if e.a not in nodes or e.b not in nodes:
                raise ValueError(f"edge {e.a!r}-{e.b!r} references an unknown node")
            seen.add((e.a, e.b))
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "provenance", {k: tuple(v) for k, v in sorted(dict(self.provenance).items())})

    def edge(self, a: str, b: str) -> UnifiedEdge | None:
        for e in self.edges:
            if (e.a, e.b) == (a, b):
                return e
            if (e.a, e.b) == (b, a):
                return UnifiedEdge(b, a, e.orientation.flipped(), e.support, e.weight, e.label)
        return None

    def neighbors(self, v: str) -> list[str]:
        out = [e.b for e in self.edges if e.a == v] + [e.a for e in self.edges if e.b == v]
        return sorted(out)

    def counts(self) -> dict:
        pos = sum(1 for e in self.edges if e.label is Label.SUPPORTIVE)
        neg = sum(1 for e in self.edges if e.label is Label.OPPOSING)
        connected = {e.a for e in self.edges} | {e.b for e in self.edges}
        return {
            "nodes": len(self.nodes),
            "connected_nodes": len(connected),
            "edges": len(self.edges),
            "supportive_edges": pos,
            "opposing_edges": neg,
        }


def classify(edge: PagEdge) -> Orientation:
    """Collapse a PAG edge to directed/undirected for merging.

    a -> b needs an arrowhead at b and none at a; everything else,
    bidirected and o-o / o-- edges included, is undirected.
    """
    if edge.mark_b is Mark.ARROW and edge.mark_a is not Mark.ARROW:
        return Orientation.A_TO_B
    if edge.mark_a is Mark.ARROW and edge.mark_b is not Mark.ARROW:
        return Orientation.B_TO_A
    return Orientation.UNDIRECTED


# --- DOT -----------------------------------------------------------------

_DOT_ARROW = {Mark.ARROW: "normal", Mark.TAIL: "none", Mark.CIRCLE: "odot"}


def _q(name: str) -> str:
    return '"' + name.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(g: Pag | UnifiedGraph, name: str = "G") -> str:
    """Deterministic Graphviz text; nodes sorted by name, edges by (a, b)."""
    lines = [f"digraph {_q(name)} {{", "  node [shape=box];"]
    for v in sorted(g.nodes):
        lines.append(f"  {_q(v)};")
    if isinstance(g, Pag):
        for e in g.edges():
            lines.append(
                f"  {_q(e.a)} -> {_q(e.b)} [dir=both, arrowtail={_DOT_ARROW[e.mark_a]}, "
                f"arrowhead={_DOT_ARROW[e.mark_b]}];"
            )
    else:
        for e in g.edges:
            attrs = []
            if e.orientation is Orientation.B_TO_A:
                attrs.append("dir=back")
            elif e.orientation is Orientation.UNDIRECTED:
                attrs.append("dir=none")
            attrs.append("style=dashed" if e.label is Label.OPPOSING else "style=solid")
            if e.weight is not None:
                attrs.append(f'label="{e.weight:.3f}"')
            lines.append(f"  {_q(e.a)} -> {_q(e.b)} [{', '.join(attrs)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


# --- JSON ----------------------------------------------------------------

def graph_to_dict(g: Pag | UnifiedGraph) -> dict:
    prov = {k: list(v) for k, v in sorted(g.provenance.items())}
    if isinstance(g, Pag):
        return {
            "type": "pag",
            "nodes": list(g.nodes),
            "edges": [
                {"a": e.a, "b": e.b, "mark_a": e.mark_a.value, "mark_b": e.mark_b.value} for e in g.edges()
            ],
            "provenance": prov,
        }
    return {
        "type": "unified",
        "nodes": list(g.nodes),
        "edges": [
            {
                "a": e.a,
                "b": e.b,
                "orientation": e.orientation.value,
                "support": e.support.value,
                "weight": e.weight,
                "label": None if e.label is None else e.label.value,
            }
            for e in g.edges
        ],
        "provenance": prov,
    }


def graph_from_dict(doc) -> Pag | UnifiedGraph:
    if not isinstance(doc, dict):
        raise ParseError("graph document must be an object")
    try:
        kind = doc["type"]
        nodes = doc["nodes"]
        prov = {k: tuple(v) for k, v in doc.get("provenance", {}).items()}
        if kind == "pag":
            g = Pag(nodes, prov)
            for e in doc["edges"]:
                g.add_edge(e["a"], e["b"], Mark(e["mark_a"]), Mark(e["mark_b"]))
            return g
        if kind == "unified":
            edges = [
                UnifiedEdge(
                    e["a"],
                    e["b"],
                    Orientation(e["orientation"]),
                    Support(e["support"]),
                    None if e["weight"] is None else float(e["weight"]),
                    None if e["label"] is None else Label(e["label"]),
                )
                for e in doc["edges"]
            ]
            return UnifiedGraph(tuple(nodes), tuple(edges), prov)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"invalid graph document: {exc!r}") from None
    raise ParseError(f"unknown graph type {kind!r}")


def to_json(g: Pag | UnifiedGraph) -> str:
    return json.dumps(graph_to_dict(g), indent=2, sort_keys=True) + "\n"


def from_json(text: str) -> Pag | UnifiedGraph:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.pos) from None
    return graph_from_dict(doc)
