import json
import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dualcausal.discovery import fci
from dualcausal.errors import NodeMismatch
from dualcausal.graph import Mark, Pag
from dualcausal.stats import FisherZTest
from dualcausal.encoding import encode
from dualcausal.synth import (
    Categorical,
    DSeparationOracle,
    GroundTruthDag,
    LinearGaussian,
    brute_force_d_separated,
    d_separated,
    oracle_pag,
    random_dag,
    run_benchmark,
    sample,
    structural_metrics,
)

from helpers import moral_d_separated


def test_random_dag_edge_cases_and_seeding():
    assert random_dag(5, 0.0, 1).edges == ()
    full = random_dag(3, 1.0, 2)
    assert len(full.edges) == 3
    order = full.topological_order()
    assert all(order.index(a) < order.index(b) for a, b in full.edges)
    assert random_dag(6, 0.4, 9) == random_dag(6, 0.4, 9)
    for mech in random_dag(7, 0.8, 3).mechanisms.values():
        assert all(0.5 <= abs(w) <= 2.0 for w in mech.weights.values())
    with pytest.raises(ValueError):
        random_dag(0, 0.5)
    with pytest.raises(ValueError):
        random_dag(3, 1.5)


def test_dag_validation():
    with pytest.raises(ValueError):
        GroundTruthDag(("a", "b"), (("a", "b"), ("b", "a")))
    with pytest.raises(ValueError):
        GroundTruthDag(("a", "b"), (("a", "b"),), {"a": LinearGaussian({"b": 1.0})})
    with pytest.raises(ValueError):
        GroundTruthDag(("a",), (), {"a": Categorical(("x", "y"), (), {(): (0.5, 0.6)})})


def test_d_separation_examples():
    collider = GroundTruthDag(("x", "y", "z"), (("x", "z"), ("y", "z")))
    assert d_separated(collider, "x", "y")
    assert not d_separated(collider, "x", "y", {"z"})
    chain = GroundTruthDag(("x", "y", "z"), (("x", "z"), ("z", "y")))
    assert not d_separated(chain, "x", "y")
    assert d_separated(chain, "x", "y", {"z"})
    apart = GroundTruthDag(("x", "y", "z"), (("x", "z"),))
    assert all(d_separated(apart, "x", "y", s) for s in [(), ("z",)])
    # conditioning on a descendant of a collider opens it
    desc = GroundTruthDag(("x", "y", "z", "w"), (("x", "z"), ("y", "z"), ("z", "w")))
    assert not d_separated(desc, "x", "y", {"w"})
    with pytest.raises(ValueError):
        d_separated(chain, "x", "y", {"x"})


@settings(max_examples=120, deadline=None)
@given(st.integers(2, 7), st.sampled_from([0.2, 0.4, 0.6]), st.integers(0, 10**6))
def test_bayes_ball_agrees_with_path_enumeration_and_moralisation(n, p, seed):
    dag = random_dag(n, p, seed)
    nodes = dag.nodes
    for x, y in combinations(nodes, 2):
        rest = [v for v in nodes if v not in (x, y)]
        for k in range(min(len(rest), 3) + 1):
            for s in combinations(rest, k):
                bb = d_separated(dag, x, y, s)
                assert bb == brute_force_d_separated(dag, x, y, s)
                assert bb == moral_d_separated(dag, x, y, set(s))


def test_sample_mean_within_clt_bound():
    dag = GroundTruthDag(("x",), (), {"x": LinearGaussian({}, 4.0, 3.0)})
    t = sample(dag, 10_000, seed=0)
    assert abs(t.columns["x"].mean() - 3.0) < 4 * 2.0 / math.sqrt(10_000)


def test_sample_categorical_and_determinism():
    mechs = {
        "a": Categorical(("u", "v"), (), {(): (0.3, 0.7)}),
        "b": Categorical(("p", "q", "r"), ("a",), {(0,): (1.0, 0.0, 0.0), (1,): (1.0, 0.0, 0.0)}),
        "y": LinearGaussian({"a": 1.0}),
    }
    dag = GroundTruthDag(("a", "b", "y"), (("a", "b"), ("a", "y")), mechs)
    t = sample(dag, 500, seed=1)
    assert set(t.labels("b")) == {"p"}
    assert 0.6 < np.mean(np.array(t.labels("a")) == "v") < 0.8
    assert t.outcome.name == "y"
    t2 = sample(dag, 500, seed=1)
    assert all(np.array_equal(t.columns[c], t2.columns[c]) for c in t.names)


def test_structural_metrics_examples():
    dag = GroundTruthDag(("a", "b", "c", "d"), (("a", "b"), ("b", "c"), ("c", "d")))
    ref = oracle_pag(dag)
    assert structural_metrics(ref, dag) == {"skeleton_precision": 1.0, "skeleton_recall": 1.0,
                                            "skeleton_f1": 1.0, "shd": 0}
    empty = Pag(dag.nodes)
    m = structural_metrics(empty, dag)
    assert m["skeleton_recall"] == 0.0 and m["shd"] == 3
    extra = ref.copy()
    extra.add_edge("a", "d")
    m = structural_metrics(extra, dag)
    assert m["skeleton_precision"] == pytest.approx(3 / 4)
    assert m["shd"] == 1
    flipped = ref.copy()
    flipped.set_mark("a", "b", Mark.ARROW)
    assert structural_metrics(flipped, dag)["shd"] == 1
    with pytest.raises(NodeMismatch):
        structural_metrics(Pag(["a"]), dag)


def test_fisher_z_agrees_with_d_separation():
    """Sampling faithfulness: >= 90% agreement on all triples with |S| <= 2."""
    agree = total = 0
    for seed in range(20):
        dag = random_dag(5, 0.4, seed)
        m = encode(sample(dag, 5000, seed=seed), "drop-first")
        test = FisherZTest(m, 0.01)
        idx = {v: i for i, v in enumerate(m.names)}
        for x, y in combinations(dag.nodes, 2):
            rest = [v for v in dag.nodes if v not in (x, y)]
            for k in range(3):
                for s in combinations(rest, k):
                    total += 1
                    agree += test(idx[x], idx[y], tuple(idx[v] for v in s)) == d_separated(dag, x, y, s)
    assert agree / total >= 0.90


def test_oracle_benchmark_is_exact_and_report_formats():
    rep = run_benchmark(n_nodes=5, edge_prob=0.4, instances=5, seed=3, oracle=True)
    assert all(i.shd == 0 and i.skeleton_f1 == 1.0 for i in rep.instances)
    doc = json.loads(rep.to_json())
    assert doc["aggregates"]["exact_instances"] == 5
    assert "seconds" not in doc["instances"][0]
    assert rep.to_csv().splitlines()[0].startswith("index,seed,")
    assert "mean_skeleton_f1" in rep.summary_table()
    assert rep.to_json() == run_benchmark(n_nodes=5, edge_prob=0.4, instances=5, seed=3, oracle=True).to_json()
    with pytest.raises(ValueError):
        run_benchmark(instances=0)


def test_oracle_nodes_subset_acts_as_latent():
    dag = GroundTruthDag(("x", "L", "y"), (("L", "x"), ("L", "y")))
    q = DSeparationOracle(dag, ["x", "y"])
    assert not q.independent("x", "y", ())
    g = fci(q)
    assert g.is_adjacent("x", "y")
