"""Small independent reference implementations used as test oracles."""

import math

import numpy as np


def recursive_partial_corr(r, x, y, cond):
    """Textbook recursion: rho_xy.S = (rho_xy.S' - rho_xz.S' rho_yz.S') / sqrt(...)."""
    if not cond:
        return r[x][y]
    z, rest = cond[0], cond[1:]
    rxy = recursive_partial_corr(r, x, y, rest)
    rxz = recursive_partial_corr(r, x, z, rest)
    ryz = recursive_partial_corr(r, y, z, rest)
    return (rxy - rxz * ryz) / math.sqrt((1 - rxz**2) * (1 - ryz**2))


def inverse_partial_corr(cov, x, y, cond):
    idx = [x, y, *cond]
    p = np.linalg.inv(np.asarray(cov)[np.ix_(idx, idx)])
    return -p[0, 1] / math.sqrt(p[0, 0] * p[1, 1])


def random_spd(rng, k):
    a = rng.normal(size=(k, k + 2))
    return a @ a.T + 0.1 * np.eye(k)


def entropy_bits(labels):
    n = len(labels)
    out = 0.0
    for c in set(labels):
        p = labels.count(c) / n
        out -= p * math.log2(p)
    return out


def moral_d_separated(dag, x, y, given):
    """Lauritzen's criterion: separation in the moralised ancestral graph."""
    keep = dag.ancestors({x, y, *given})
    adj = {v: set() for v in keep}
    for a, b in dag.edges:
        if a in keep and b in keep:
            adj[a].add(b)
            adj[b].add(a)
    for v in keep:
        ps = [p for p in dag.parents(v) if p in keep]
        for i, p in enumerate(ps):
            for q in ps[i + 1:]:
                adj[p].add(q)
                adj[q].add(p)
    seen, stack = {x}, [x]
    while stack:
        v = stack.pop()
        for w in adj[v]:
            if w == y:
                return False
            if w not in seen and w not in given:
                seen.add(w)
                stack.append(w)
    return True
