"""Feasibility checks, an exhaustive oracle for small instances, and LP strength."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

from .instance import Instance
from .tree import SteinerTree, build_tree, root_only

MAX_BRUTE_FORCE_NODES = 12


class InstanceTooLarge(ValueError):
    pass


@dataclass
class VerifyReport:
    valid: bool
    violations: list[str] = field(default_factory=list)
    objective: float = math.nan
    total_cost: float = math.nan
    depth: dict[int, int] = field(default_factory=dict)

    def to_json(self) -> str:
        data = asdict(self)
        data["depth"] = {str(v + 1): d for v, d in sorted(self.depth.items())}
        return json.dumps(data, indent=2)


def _budget_ok(cost: float, instance: Instance) -> bool:
    if instance.is_integral:
        return cost <= instance.budget
    return cost <= instance.budget + 1e-9


def verify_solution(instance: Instance, tree: SteinerTree) -> VerifyReport:
    """Check ``tree`` against the instance from scratch and list every problem.

    Only ``tree.arcs`` is trusted as input; depths, cost and objective are
    recomputed. A claimed objective that disagrees is itself a violation.
    """
    r = instance.root
    problems = []
    arcs = list(tree.arcs)

    known = []
    for u, v in arcs:
        if (u, v) in instance.edge_cost:
            known.append((u, v))
        else:
            problems.append(f"unknown arc ({u + 1},{v + 1})")
    undirected = {}
    for u, v in known:
        key = (min(u, v), max(u, v))
        undirected[key] = undirected.get(key, 0) + 1
    for (u, v), k in sorted(undirected.items()):
        if k > 1:
            problems.append(f"edge ({u + 1},{v + 1}) used {k} times")

    parents: dict[int, list[int]] = {}
    children: dict[int, list[int]] = {}
    for u, v in known:
        parents.setdefault(v, []).append(u)
        children.setdefault(u, []).append(v)
    if r in parents:
        problems.append(f"root {r + 1} has an incoming arc")
    for v, ps in sorted(parents.items()):
        if len(ps) > 1 and v != r:
            problems.append(f"node {v + 1} has {len(ps)} incoming arcs")

    depth = {r: 0}
    stack = [r]
    while stack:
        u = stack.pop()
        for w in children.get(u, ()):
            if w in depth:
                problems.append(f"cycle or reconvergence at node {w + 1}")
                continue
            depth[w] = depth[u] + 1
            stack.append(w)
    touched = {u for u, _ in known} | {v for _, v in known}
    stray = sorted(v + 1 for v in touched if v not in depth)
    if stray:
        problems.append(f"nodes {stray} not connected to root")

    for v, d in sorted(depth.items()):
        if d > instance.hop_limit:
            problems.append(f"hop limit exceeded at node {v + 1} (depth {d} > {instance.hop_limit})")

    cost = math.fsum(instance.edge_cost[a] for a in known)
    if not _budget_ok(cost, instance):
        problems.append(f"budget exceeded ({cost:g} > {instance.budget:g})")

    nodes = ({r} | touched) if known else {r}
    objective = math.fsum(instance.revenues[v] for v in nodes)
    if not math.isnan(tree.objective) and abs(tree.objective - objective) > 1e-6 * max(1.0, abs(objective)):
        problems.append(f"objective mismatch (claimed {tree.objective:g}, actual {objective:g})")

    return VerifyReport(not problems, problems, objective, cost, depth)


def brute_force(instance: Instance) -> tuple[SteinerTree, float]:
    """Best tree by exhaustive enumeration of the root-containing subtrees.

    Subtrees are grown one frontier edge at a time; once an edge has been
    tried and backed out of, the remaining branch never uses it, so every edge
    set forming a tree through the root is visited exactly once. Branches are
    cut only when the next edge already breaks the budget or the hop limit.
    Ties go to the lexicographically smallest sorted arc list.
    """
    n = instance.node_count
    if n > MAX_BRUTE_FORCE_NODES:
        raise InstanceTooLarge(f"{n} nodes; brute force is limited to {MAX_BRUTE_FORCE_NODES}")
    r, H, B = instance.root, instance.hop_limit, instance.budget
    rho = instance.revenues
    slack = 0.0 if instance.is_integral else 1e-9
    adj = instance.adjacency

    best_obj = rho[r]
    best_arcs: list[tuple[int, int]] = []
    in_tree = [False] * n
    in_tree[r] = True
    depth = [0] * n
    arcs: list[tuple[int, int]] = []

    def grow(frontier, cost, obj):
        nonlocal best_obj, best_arcs
        if obj > best_obj or (obj == best_obj and sorted(arcs) < best_arcs):
            best_obj, best_arcs = obj, sorted(arcs)
        frontier = list(frontier)
        while frontier:
            u, v, c = frontier.pop()
            if cost + c > B + slack or depth[u] + 1 > H:
                continue
            in_tree[v] = True
            depth[v] = depth[u] + 1
            arcs.append((u, v))
            nxt = [e for e in frontier if e[1] != v]
            nxt += [(v, w, cw) for w, cw in adj[v] if not in_tree[w]]
            grow(nxt, cost + c, obj + rho[v])
            arcs.pop()
            in_tree[v] = False

    grow([(r, w, c) for w, c in adj[r]], 0.0, rho[r])
    if not best_arcs:
        tree = root_only(instance)
        return tree, tree.objective
    tree = build_tree(instance, best_arcs)
    return tree, best_obj


@dataclass
class StrengthReport:
    lp_value: float
    opt_value: float
    strength: float | None

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


def strength(instance: Instance, params=None) -> StrengthReport:
    """LP value of the basic model over the optimum found with the POP2 model."""
    from .bnb import OPTIMAL, SolveParams, solve_milp
    from .popmodel import BASIC, POP2, build_pop, start_assignment
    from .simplex import solve_lp

    basic, _ = build_pop(instance, BASIC)
    lp = solve_lp(basic)
    model, index = build_pop(instance, POP2)
    report = solve_milp(model, params or SolveParams(), start=start_assignment(instance, model, index))
    if report.status != OPTIMAL:
        raise RuntimeError(f"POP2 solve ended with status {report.status}: {report.message}")
    opt = report.lb
    return StrengthReport(lp.objective, opt, lp.objective / opt if opt > 0 else None)
