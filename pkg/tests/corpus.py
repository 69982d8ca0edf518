"""Seeded random instances shared by the test modules."""

from __future__ import annotations

import numpy as np

from stprbh.instance import Instance

CORPUS_SIZE = 200
CORPUS_SEED = 20240611

# root a b with unit costs, revenues 5 and 3, one unit of budget, one hop
STAR = Instance(
    node_count=3,
    edges=((0, 1, 1.0), (0, 2, 1.0)),
    revenues=(2.0, 5.0, 3.0),
    root=0,
    budget=1.0,
    hop_limit=1,
    name="star",
)
STAR_ROOT_REVENUE = 2.0


def random_instance(seed: int, max_nodes: int = 10, max_hop: int = 4, min_nodes: int = 2) -> Instance:
    """Small integral instance; roughly one in eight has an isolated node."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(min_nodes, max_nodes + 1))
    connected = n if n < 3 or rng.random() > 0.125 else n - 1
    perm = rng.permutation(connected)
    edges = set()
    for k in range(1, connected):
        u, v = int(perm[k]), int(perm[rng.integers(k)])
        edges.add((min(u, v), max(u, v)))
    for _ in range(int(rng.integers(0, 2 * n))):
        u, v = rng.choice(connected, 2, replace=False) if connected > 1 else (0, 0)
        if u != v:
            edges.add((int(min(u, v)), int(max(u, v))))
    cost_cap = int(rng.choice([1, 3, 10]))
    edge_list = tuple((u, v, float(rng.integers(1, cost_cap + 1))) for u, v in sorted(edges))
    terminal = rng.random(n) < 0.6
    revenues = tuple(float(rng.integers(1, 11)) if t else 0.0 for t in terminal)
    total = int(sum(c for _, _, c in edge_list))
    budget = float(rng.integers(0, total + 2))
    return Instance(
        node_count=n,
        edges=edge_list,
        revenues=revenues,
        root=int(rng.integers(connected)),
        budget=budget,
        hop_limit=int(rng.integers(1, max_hop + 1)),
        name=f"rand{seed}",
    )


def corpus(size: int = CORPUS_SIZE, seed: int = CORPUS_SEED) -> list[Instance]:
    seeds = np.random.SeedSequence(seed).generate_state(size)
    return [random_instance(int(s)) for s in seeds]
