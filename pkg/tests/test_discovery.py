import random
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dualcausal.data import ColumnSchema, Kind, Role, table_from_records
from dualcausal.discovery import (
    BackgroundKnowledge,
    MatrixTest,
    SepsetTable,
    fci,
    fci_search,
    orient_colliders,
    orient_fci_rules,
    possible_d_sep,
    skeleton,
)
from dualcausal.encoding import encode
from dualcausal.errors import SingularityAbort
from dualcausal.graph import Mark, Pag
from dualcausal.synth import DSeparationOracle, GroundTruthDag, d_separated, random_dag


def dag(edges, nodes=None):
    nodes = nodes or sorted({v for e in edges for v in e})
    return GroundTruthDag(tuple(nodes), tuple(edges))


def oracle(edges, nodes=None, observed=None):
    return DSeparationOracle(dag(edges, nodes), observed)


def marks(g, a, b):
    e = g.edge(a, b)
    return e.mark_a, e.mark_b


def test_collider_skeleton_and_orientation():
    q = oracle([("x", "z"), ("y", "z")])
    skel, seps = skeleton(q)
    assert sorted((e.a, e.b) for e in skel.edges()) == [("x", "z"), ("y", "z")]
    assert seps.get("x", "y") == ()
    g = fci(q)
    assert marks(g, "x", "z") == (Mark.CIRCLE, Mark.ARROW)
    assert marks(g, "y", "z") == (Mark.CIRCLE, Mark.ARROW)


def test_chain_has_no_collider():
    q = oracle([("x", "z"), ("z", "y")])
    skel, seps = skeleton(q)
    assert seps.get("x", "y") == ("z",)
    g = fci(q)
    assert all(e.mark_a is Mark.CIRCLE and e.mark_b is Mark.CIRCLE for e in g.edges())


def test_rule1_propagates_away_from_collider():
    g = fci(oracle([("x", "z"), ("y", "z"), ("z", "w")]))
    assert marks(g, "z", "w") == (Mark.TAIL, Mark.ARROW)


def test_rule3_orients_into_collider_node():
    # t is in sepset(a, c); a -> b <- c plus t - b
    g = fci(oracle([("t", "a"), ("t", "c"), ("a", "b"), ("c", "b"), ("t", "b")]))
    assert g.mark("t", "b") is Mark.ARROW


def test_latent_confounder_gives_bidirected_edge():
    q = oracle([("a", "x"), ("L", "x"), ("L", "y"), ("b", "y")], observed=["a", "b", "x", "y"])
    g = fci(q)
    assert marks(g, "x", "y") == (Mark.ARROW, Mark.ARROW)
    assert g.mark("a", "x") is Mark.ARROW
    assert g.mark("b", "y") is Mark.ARROW


def test_possible_d_sep_removes_edge_masked_from_skeleton_search():
    # Textbook case: x and y are separated only by a set that includes a
    # non-neighbour of both, reachable through colliders.
    edges = [("x", "u"), ("L1", "u"), ("L1", "v"), ("L2", "v"), ("L2", "y"),
             ("x", "w"), ("w", "y"), ("u", "y"), ("v", "y")]
    observed = ["u", "v", "w", "x", "y"]
    truth = dag(edges)
    g = fci(DSeparationOracle(truth, observed))
    for e in g.edges():
        assert not _separable(truth, e.a, e.b, observed)
    for a in observed:
        for b in observed:
            if a < b and not g.is_adjacent(a, b):
                assert _separable(truth, a, b, observed)


def _separable(truth, a, b, observed):
    rest = [v for v in observed if v not in (a, b)]
    return any(d_separated(truth, a, b, s) for k in range(len(rest) + 1) for s in combinations(rest, k))


def test_sink_constraint():
    q = oracle([("y", "x"), ("y", "z"), ("x", "w")])
    g = fci(q, bk=BackgroundKnowledge("y"))
    for v in g.neighbors("y"):
        assert marks(g, v, "y") == (Mark.TAIL, Mark.ARROW)
    assert BackgroundKnowledge("y").forbidden_edges(["x", "y"]) == {("y", "x")}
    with pytest.raises(ValueError):
        skeleton(q, bk=BackgroundKnowledge("nope"))


def test_orientation_only_touches_circles():
    skel = Pag(["a", "b", "c"])
    skel.add_edge("a", "b")
    skel.add_edge("b", "c")
    seps = SepsetTable()
    seps.set("a", "c", ())
    g = orient_colliders(skel, seps)
    before = {(e.a, e.b): (e.mark_a, e.mark_b) for e in g.edges()}
    after = orient_fci_rules(g, seps)
    for e in after.edges():
        for old, new in zip(before[(e.a, e.b)], (e.mark_a, e.mark_b)):
            assert old is Mark.CIRCLE or old is new


def test_possible_d_sep_reaches_through_colliders():
    g = Pag(["a", "b", "c", "d"])
    g.add_edge("a", "b", Mark.CIRCLE, Mark.ARROW)
    g.add_edge("b", "c", Mark.ARROW, Mark.ARROW)
    g.add_edge("c", "d", Mark.CIRCLE, Mark.CIRCLE)
    assert possible_d_sep(g, "a") == {"b", "c"}


def _ancestral_soundness(g, truth):
    anc = {v: truth.ancestors([v]) for v in truth.nodes}
    for e in g.edges():
        for a, b, mark in ((e.a, e.b, e.mark_b), (e.b, e.a, e.mark_a)):
            if mark is Mark.ARROW:
                assert b not in anc[a], f"{a}*->{b} but {b} is an ancestor of {a}"
            if mark is Mark.TAIL:
                assert b in anc[a], f"tail at {b} on {a}-{b} but {b} is not an ancestor of {a}"


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 7), st.sampled_from([0.2, 0.4, 0.6]), st.integers(0, 10**6))
def test_oracle_fci_is_sound_on_dags(n, p, seed):
    truth = random_dag(n, p, seed)
    g = fci(DSeparationOracle(truth))
    assert {frozenset((e.a, e.b)) for e in g.edges()} == truth.skeleton()
    _ancestral_soundness(g, truth)
    for b in truth.nodes:
        ps = truth.parents(b)
        for i, a in enumerate(ps):
            for c in ps[i + 1:]:
                if frozenset((a, c)) not in truth.skeleton():
                    assert g.mark(a, b) is Mark.ARROW and g.mark(c, b) is Mark.ARROW


@settings(max_examples=60, deadline=None)
@given(st.integers(3, 7), st.integers(0, 10**6))
def test_oracle_fci_is_sound_with_latents(n, seed):
    truth = random_dag(n, 0.5, seed)
    hidden = set(random.Random(seed).sample(truth.nodes, 1))
    observed = [v for v in truth.nodes if v not in hidden]
    g = fci(DSeparationOracle(truth, observed))
    _ancestral_soundness(g, truth)
    for a in observed:
        for b in observed:
            if a < b:
                assert g.is_adjacent(a, b) == (not _separable(truth, a, b, observed))


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 7), st.integers(0, 10**6))
def test_result_invariant_to_node_order_and_threads(n, seed):
    truth = random_dag(n, 0.4, seed)
    order = list(truth.nodes)
    random.Random(seed).shuffle(order)
    base = fci(DSeparationOracle(truth))
    assert fci(DSeparationOracle(truth, order)) == base
    assert fci(DSeparationOracle(truth), threads=4) == base


def _categorical_table(n=300, seed=0):
    rng = np.random.default_rng(seed)
    port = rng.choice(["C", "Q", "S"], size=n)
    x = rng.normal(size=n) + (port == "S")
    y = (x + rng.normal(size=n) > 0.5).astype(int).astype(str)
    schema = [ColumnSchema("Port", Kind.CATEGORICAL, ("C", "Q", "S")), ColumnSchema("x", Kind.CONTINUOUS),
              ColumnSchema("y", Kind.BINARY, ("0", "1"), Role.OUTCOME)]
    return table_from_records(schema, {"Port": list(port), "x": list(x), "y": list(y)})


def test_full_encoding_aborts_with_names():
    t = _categorical_table()
    with pytest.raises(SingularityAbort) as info:
        fci(MatrixTest(encode(t, "full")))
    assert info.value.names is not None
    names = {info.value.names[0], info.value.names[1], *info.value.names[2]}
    assert {"Port=C", "Port=Q", "Port=S"} <= names
    for s in ("drop-first", "drop-last"):
        res = fci_search(MatrixTest(encode(t, s)), bk=BackgroundKnowledge("y"))
        assert res.n_tests > 0


def test_encoded_matrix_source_and_provenance():
    m = encode(_categorical_table(), "drop-first")
    g = fci(m, bk=BackgroundKnowledge("y"))
    assert sorted(g.nodes) == sorted(m.names)
    assert g.provenance["Port=S"] == ("Port", "S")


def test_too_few_samples_stops_search():
    rng = np.random.default_rng(0)
    schema = [ColumnSchema(f"x{i}", Kind.CONTINUOUS) for i in range(5)] + [
        ColumnSchema("y", Kind.CONTINUOUS, role=Role.OUTCOME)]
    data = rng.normal(size=(6, 6))
    t = table_from_records(schema, {c.name: list(data[:, i]) for i, c in enumerate(schema)})
    skel, _ = skeleton(MatrixTest(encode(t, "drop-first")))
    assert skel.n_edges() >= 0
