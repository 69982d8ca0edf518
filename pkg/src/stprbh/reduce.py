"""Root distance tables and the extended undirected root cost (EURC) reduction."""

from __future__ import annotations

import heapq
import json
import math
from collections import deque
from dataclasses import asdict, dataclass, field

from .instance import Instance

INF = math.inf
COST_TOL = 1e-9


@dataclass(frozen=True)
class DistanceTable:
    """Shortest-path information from the root.

    ``weighted_pred`` encodes one shortest-path tree (``-1`` for the root and
    unreachable nodes); ``weighted_len`` is the edge count of that stored
    path, which can exceed the hop distance ``unweighted_len``.
    """

    root: int
    weighted_cost: tuple[float, ...]
    weighted_pred: tuple[int, ...]
    weighted_len: tuple[float, ...]
    unweighted_len: tuple[float, ...]

    def path(self, v: int) -> list[int]:
        """Nodes of the stored weighted path from the root to ``v``."""
        if self.weighted_cost[v] == INF:
            raise ValueError(f"node {v} is unreachable")
        out = [v]
        while out[-1] != self.root:
            out.append(self.weighted_pred[out[-1]])
        return out[::-1]


def _lt(a: float, b: float, exact: bool) -> bool:
    return a < b if exact else a < b - COST_TOL


def _eq(a: float, b: float, exact: bool) -> bool:
    return a == b if exact else abs(a - b) <= COST_TOL


def shortest_paths(instance: Instance) -> DistanceTable:
    """Dijkstra from the root plus breadth-first hop distances.

    Among equal-cost paths the one with fewer edges wins, then the one whose
    last hop comes from the smaller node id.
    """
    n, r = instance.node_count, instance.root
    exact = instance.is_integral
    cost = [INF] * n
    hops = [INF] * n
    pred = [-1] * n
    cost[r], hops[r] = 0.0, 0
    done = [False] * n
    heap = [(0.0, 0, r)]
    while heap:
        d, k, u = heapq.heappop(heap)
        if done[u] or d != cost[u] or k != hops[u]:
            continue
        done[u] = True
        for w, c in instance.adjacency[u]:
            if done[w]:
                continue
            nd, nk = d + c, k + 1
            better = _lt(nd, cost[w], exact) or (
                _eq(nd, cost[w], exact) and (nk < hops[w] or (nk == hops[w] and u < pred[w]))
            )
            if better:
                cost[w], hops[w], pred[w] = nd, nk, u
                heapq.heappush(heap, (nd, nk, w))

    ulen = [INF] * n
    ulen[r] = 0
    queue = deque([r])
    while queue:
        u = queue.popleft()
        for w, _ in instance.adjacency[u]:
            if ulen[w] == INF:
                ulen[w] = ulen[u] + 1
                queue.append(w)

    return DistanceTable(r, tuple(cost), tuple(pred), tuple(hops), tuple(ulen))


@dataclass
class ReductionLog:
    """What a reduction removed. Node ids are 1-based, matching STP files."""

    removed_edges: list[tuple[int, int, float, str]] = field(default_factory=list)
    trimmed_nodes: list[int] = field(default_factory=list)
    trimmed_edges: list[tuple[int, int, float]] = field(default_factory=list)
    original_sizes: tuple[int, int] = (0, 0)
    reduced_sizes: tuple[int, int] = (0, 0)
    # reduced node id -> original node id, both 1-based; empty when ids are unchanged
    node_map: dict[int, int] = field(default_factory=dict)

    def to_json(self) -> str:
        data = asdict(self)
        data["node_map"] = {str(k): v for k, v in self.node_map.items()}
        return json.dumps(data, indent=2)

    def merge(self, later: "ReductionLog") -> "ReductionLog":
        """Compose with a log produced on this log's output instance."""
        back = self.node_map or {}

        def orig(v: int) -> int:
            return back.get(v, v)

        node_map = {k: orig(v) for k, v in later.node_map.items()} if later.node_map else dict(self.node_map)
        return ReductionLog(
            removed_edges=self.removed_edges + [(orig(u), orig(v), c, why) for u, v, c, why in later.removed_edges],
            trimmed_nodes=self.trimmed_nodes + [orig(v) for v in later.trimmed_nodes],
            trimmed_edges=self.trimmed_edges + [(orig(u), orig(v), c) for u, v, c in later.trimmed_edges],
            original_sizes=self.original_sizes,
            reduced_sizes=later.reduced_sizes,
            node_map=node_map,
        )


def _has_alternate_path(dist: DistanceTable, a: int, b: int, c_ab: float, exact: bool) -> bool:
    """Stored root path to ``b`` can replace edge ``ab`` entered from ``a``."""
    cheap = dist.weighted_cost[b] <= c_ab if exact else dist.weighted_cost[b] <= c_ab + COST_TOL
    short = dist.weighted_len[b] <= dist.unweighted_len[a] + 1
    return cheap and short


def eurc_reduce(instance: Instance, distances: DistanceTable | None = None) -> tuple[Instance, ReductionLog]:
    """Delete every non-root edge that both root paths can stand in for.

    Edge ``uv`` goes when the stored cheapest root path to ``v`` costs at most
    ``c_uv`` and has at most ``len(r,u)+1`` edges, and symmetrically for
    ``u``. One pass in ascending ``(u, v)`` order against the distances of the
    input graph; removed edges never lie on a stored path, so the table stays
    valid throughout.
    """
    dist = distances if distances is not None else shortest_paths(instance)
    r = instance.root
    exact = instance.is_integral
    kept, removed = [], []
    for u, v, c in instance.edges:
        if (
            u != r
            and v != r
            and dist.weighted_cost[u] < INF
            and dist.weighted_cost[v] < INF
            and _has_alternate_path(dist, u, v, c, exact)
            and _has_alternate_path(dist, v, u, c, exact)
        ):
            removed.append((u + 1, v + 1, c, "eurc"))
        else:
            kept.append((u, v, c))
    reduced = instance.with_edges(kept)
    log = ReductionLog(
        removed_edges=removed,
        original_sizes=(instance.node_count, instance.edge_count),
        reduced_sizes=(reduced.node_count, reduced.edge_count),
    )
    return reduced, log


def trim_unreachable(instance: Instance, distances: DistanceTable | None = None) -> tuple[Instance, ReductionLog]:
    """Drop nodes farther than the hop limit from the root, renumbering the rest."""
    dist = distances if distances is not None else shortest_paths(instance)
    H = instance.hop_limit
    keep = [v for v in range(instance.node_count) if v == instance.root or dist.unweighted_len[v] <= H]
    sizes = (instance.node_count, instance.edge_count)
    if len(keep) == instance.node_count:
        return instance, ReductionLog(original_sizes=sizes, reduced_sizes=sizes)

    new_id = {v: i for i, v in enumerate(keep)}
    edges, dropped = [], []
    for u, v, c in instance.edges:
        if u in new_id and v in new_id:
            edges.append((new_id[u], new_id[v], c))
        else:
            dropped.append((u + 1, v + 1, c))
    reduced = Instance(
        node_count=len(keep),
        edges=tuple(edges),
        revenues=tuple(instance.revenues[v] for v in keep),
        root=new_id[instance.root],
        budget=instance.budget,
        hop_limit=H,
        name=instance.name,
    )
    log = ReductionLog(
        trimmed_nodes=[v + 1 for v in range(instance.node_count) if v not in new_id],
        trimmed_edges=dropped,
        original_sizes=sizes,
        reduced_sizes=(reduced.node_count, reduced.edge_count),
        node_map={i + 1: v + 1 for i, v in enumerate(keep)},
    )
    return reduced, log
