"""Rooted Steiner trees as sets of arcs oriented away from the root."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

from .instance import Instance


class NotATree(ValueError):
    pass


@dataclass(frozen=True)
class SteinerTree:
    root: int
    arcs: tuple[tuple[int, int], ...]
    objective: float
    total_cost: float = math.nan
    depth: dict[int, int] = field(default_factory=dict, compare=False)

    @property
    def nodes(self) -> frozenset[int]:
        out = {self.root}
        for u, v in self.arcs:
            out.add(u)
            out.add(v)
        return frozenset(out)


def build_tree(instance: Instance, arcs) -> SteinerTree:
    """Orient-check ``arcs`` and compute depths, cost and objective.

    Raises ``NotATree`` if some node has two parents, an arc enters the root,
    or an arc is not reachable from the root (which also covers cycles).
    Hop and budget limits are not checked here; see ``verify_solution``.
    """
    r = instance.root
    arcs = tuple(sorted((int(u), int(v)) for u, v in arcs))
    parent: dict[int, int] = {}
    children: dict[int, list[int]] = {}
    for u, v in arcs:
        if (u, v) not in instance.edge_cost:
            raise NotATree(f"arc ({u + 1},{v + 1}) is not an edge")
        if v == r:
            raise NotATree(f"arc ({u + 1},{v + 1}) enters the root")
        if v in parent:
            raise NotATree(f"node {v + 1} has two incoming arcs")
        parent[v] = u
        children.setdefault(u, []).append(v)

    depth = {r: 0}
    queue = deque([r])
    while queue:
        u = queue.popleft()
        for w in children.get(u, ()):
            depth[w] = depth[u] + 1
            queue.append(w)
    if len(depth) != len(parent) + 1:
        stray = sorted(v + 1 for v in parent if v not in depth)
        raise NotATree(f"nodes {stray} are not connected to the root")

    objective = instance.revenues[r] + math.fsum(instance.revenues[v] for v in parent)
    cost = math.fsum(instance.edge_cost[a] for a in arcs)
    return SteinerTree(r, arcs, objective, cost, depth)


def root_only(instance: Instance) -> SteinerTree:
    return SteinerTree(instance.root, (), instance.revenues[instance.root], 0.0, {instance.root: 0})
