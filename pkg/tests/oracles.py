"""Independent slow-route oracles used by the tests.

Everything here deliberately avoids the library's own solver machinery:
chains are enumerated with networkx and the convex programs handed to
scipy's general-purpose SLSQP/linprog, so agreement is a two-route check.
"""

import networkx as nx
import numpy as np
from scipy.optimize import linprog, minimize


def nx_from_adj(adj):
    G = nx.Graph()
    G.add_nodes_from(range(len(adj)))
    for u, nbrs in enumerate(adj):
        for v in nbrs:
            G.add_edge(u, int(v))
    return G


def minimal_chain_sets(G, A, B):
    """Vertex sets of all inclusion-minimal chains joining A and B.

    Every chain contains a simple a-b path, so enumerating simple paths
    and pruning supersets yields exactly the binding constraints.
    """
    A = sorted(set(int(a) for a in A))
    B = sorted(set(int(b) for b in B))
    sets = [frozenset([v]) for v in set(A) & set(B)]
    for a in A:
        for b in B:
            if a == b:
                continue
            for path in nx.all_simple_paths(G, a, b):
                sets.append(frozenset(path))
    minimal = []
    for s in sorted(set(sets), key=len):
        if not any(m <= s for m in minimal):
            minimal.append(s)
    return [sorted(m) for m in minimal]


def exhaustive_mod(adj, A, B, q, return_weights=False):
    """Exact small-graph modulus by full chain enumeration + convex solve."""
    G = nx_from_adj(adj)
    chains = minimal_chain_sets(G, A, B)
    if not chains:
        return (np.inf, None) if return_weights else np.inf
    n = G.number_of_nodes()
    M = np.zeros((len(chains), n))
    for i, c in enumerate(chains):
        M[i, c] = 1.0

    if q == 1.0:
        res = linprog(np.ones(n), A_ub=-M, b_ub=-np.ones(len(chains)),
                      bounds=[(0, None)] * n, method="highs")
        assert res.status == 0, res.message
        w = res.x
    else:
        cons = [{"type": "ineq",
                 "fun": lambda w, row=M[i]: row @ w - 1.0,
                 "jac": lambda w, row=M[i]: row}
                for i in range(len(chains))]
        w0 = np.full(n, 1.0 / max(1, min(len(c) for c in chains)))
        res = minimize(lambda w: np.sum(np.abs(w) ** q),
                       w0,
                       jac=lambda w: q * np.sign(w) * np.abs(w) ** (q - 1),
                       bounds=[(0.0, None)] * n,
                       constraints=cons, method="SLSQP",
                       options={"maxiter": 400, "ftol": 1e-14})
        w = np.clip(res.x, 0.0, None)
        # feasibility polish: SLSQP can sit a hair below a constraint
        worst = (M @ w).min()
        if worst < 1.0:
            w = w / worst
    value = float(np.sum(w ** q))
    return (value, w) if return_weights else value


def connected_atlas_graphs(max_nodes):
    """All connected graphs with 1..max_nodes vertices, up to isomorphism."""
    from networkx.generators.atlas import graph_atlas_g

    out = []
    for G in graph_atlas_g():
        n = G.number_of_nodes()
        if 1 <= n <= max_nodes and nx.is_connected(G):
            adj = [sorted(G.neighbors(v)) for v in range(n)]
            out.append(adj)
    return out
