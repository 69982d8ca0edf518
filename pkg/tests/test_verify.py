import itertools
import json
import math

import pytest

from corpus import STAR, corpus
from stprbh.instance import Instance
from stprbh.tree import SteinerTree, build_tree, root_only
from stprbh.verify import InstanceTooLarge, brute_force, strength, verify_solution


def path_instance(n: int, hop: int, budget: float = 100.0) -> Instance:
    edges = tuple((k, k + 1, 1.0) for k in range(n - 1))
    return Instance(n, edges, (0.0,) + (1.0,) * (n - 1), 0, budget, hop)


def test_root_only_valid():
    report = verify_solution(STAR, root_only(STAR))
    assert report.valid and report.objective == STAR.revenues[0]


def test_unknown_arc():
    report = verify_solution(STAR, SteinerTree(0, ((1, 2),), math.nan))
    assert not report.valid
    assert any("unknown arc" in v for v in report.violations)


def test_hop_limit_exceeded():
    inst = path_instance(4, hop=2)
    tree = SteinerTree(0, ((0, 1), (1, 2), (2, 3)), math.nan)
    report = verify_solution(inst, tree)
    assert any("hop limit exceeded" in v for v in report.violations)
    assert report.depth[3] == 3


def test_budget_exceeded_and_float_tolerance():
    inst = path_instance(3, hop=2, budget=1.0)
    report = verify_solution(inst, SteinerTree(0, ((0, 1), (1, 2)), math.nan))
    assert any("budget exceeded" in v for v in report.violations)
    frac = Instance(2, ((0, 1, 0.1 + 0.2),), (0, 1), 0, 0.3, 1)
    assert verify_solution(frac, SteinerTree(0, ((0, 1),), math.nan)).valid


def test_structure_violations():
    inst = Instance(4, ((0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0), (2, 3, 1.0)), (0, 1, 1, 1), 0, 10, 3)
    two_parents = verify_solution(inst, SteinerTree(0, ((0, 1), (0, 2), (1, 2)), math.nan))
    assert any("incoming arcs" in v for v in two_parents.violations)
    into_root = verify_solution(inst, SteinerTree(0, ((1, 0),), math.nan))
    assert any("root" in v for v in into_root.violations)
    detached = verify_solution(inst, SteinerTree(0, ((2, 3),), math.nan))
    assert any("not connected" in v for v in detached.violations)
    both_ways = verify_solution(inst, SteinerTree(0, ((0, 1), (1, 2), (2, 1)), math.nan))
    assert not both_ways.valid


def test_objective_mismatch():
    report = verify_solution(STAR, SteinerTree(0, ((0, 1),), 99.0))
    assert report.violations == ["objective mismatch (claimed 99, actual 7)"]


def test_report_json():
    data = json.loads(verify_solution(STAR, build_tree(STAR, [(0, 1)])).to_json())
    assert data["valid"] and data["depth"] == {"1": 0, "2": 1}


def test_brute_force_star():
    # four subsets: {}, {ra}, {rb}, {ra, rb}; the last breaks B=1
    tree, value = brute_force(STAR)
    assert value == STAR.revenues[0] + 5
    assert tree.arcs == ((0, 1),)


def test_brute_force_zero_budget():
    inst = Instance(3, ((0, 1, 1.0), (0, 2, 1.0)), (1, 5, 3), 0, 0, 2)
    tree, value = brute_force(inst)
    assert tree.arcs == () and value == 1


def test_brute_force_hop_one_triangle():
    inst = Instance(3, ((0, 1, 1.0), (1, 2, 1.0), (0, 2, 9.0)), (0, 4, 6), 0, 1e9, 1)
    tree, value = brute_force(inst)
    assert set(tree.arcs) == {(0, 1), (0, 2)} and value == 10


def test_brute_force_tie_break():
    # both single arcs reach value 5; the smaller arc list wins
    inst = Instance(3, ((0, 1, 1.0), (0, 2, 1.0)), (0, 5, 5), 0, 1, 1)
    assert brute_force(inst)[0].arcs == ((0, 1),)


def test_brute_force_too_large():
    with pytest.raises(InstanceTooLarge):
        brute_force(path_instance(13, hop=3))


def _subset_oracle(inst):
    """Slow independent oracle: every edge subset, every orientation checked by verify_solution."""
    best = inst.revenues[inst.root]
    for k in range(1, inst.node_count):
        for subset in itertools.combinations(inst.edges, k):
            nodes = {inst.root}
            arcs = []
            pending = list(subset)
            grew = True
            while pending and grew:
                grew = False
                for e in list(pending):
                    u, v, _ = e
                    if (u in nodes) != (v in nodes):
                        a, b = (u, v) if u in nodes else (v, u)
                        arcs.append((a, b))
                        nodes.add(b)
                        pending.remove(e)
                        grew = True
            if pending:
                continue
            report = verify_solution(inst, SteinerTree(inst.root, tuple(arcs), math.nan))
            if report.valid:
                best = max(best, report.objective)
    return best


def test_brute_force_matches_subset_enumeration():
    for inst in corpus(60, seed=41):
        if inst.edge_count > 14:
            continue
        assert brute_force(inst)[1] == _subset_oracle(inst)


def test_monotone_in_hop_and_budget():
    for inst in corpus(60, seed=43):
        base = brute_force(inst)[1]
        assert base >= inst.revenues[inst.root]
        looser_h = Instance(inst.node_count, inst.edges, inst.revenues, inst.root, inst.budget, inst.hop_limit + 1)
        looser_b = Instance(inst.node_count, inst.edges, inst.revenues, inst.root, inst.budget + 3, inst.hop_limit)
        assert brute_force(looser_h)[1] >= base
        assert brute_force(looser_b)[1] >= base


def test_strength_star():
    report = strength(STAR)
    assert report.opt_value == 7
    assert report.strength == pytest.approx(1.0)
    assert json.loads(report.to_json())["lp_value"] == pytest.approx(7)


def test_strength_undefined_for_zero_optimum():
    inst = Instance(2, ((0, 1, 5.0),), (0, 3), 0, 1, 1)
    assert strength(inst).strength is None
