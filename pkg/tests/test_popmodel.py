import numpy as np
import pytest

from corpus import STAR, corpus, random_instance
from stprbh.instance import Instance
from stprbh.popmodel import (
    BASIC,
    POP1,
    POP2,
    EmptyGraph,
    build_pop,
    column_count,
    decode_solution,
    implied_positions,
    row_count_bound,
    start_assignment,
)
from stprbh.tree import NotATree


def test_b01_sized_column_count():
    # a 50-node, 63-edge graph with H=3, the size of the B01 family
    rng = np.random.default_rng(1)
    edges = {(min(v, int(rng.integers(v))), v) for v in range(1, 50)}
    while len(edges) < 63:
        u, v = sorted(int(x) for x in rng.choice(50, 2, replace=False))
        edges.add((u, v))
    inst = Instance(50, tuple((u, v, 1.0) for u, v in edges), (0.0,) * 50, 0, 10, 3)
    for variant in (BASIC, POP1, POP2):
        assert build_pop(inst, variant)[0].num_columns == 224


def test_hop_one_has_no_g_columns():
    model, index = build_pop(STAR, BASIC)
    assert model.num_columns == 2 * STAR.edge_count
    assert not index.g_index


def test_empty_graph():
    with pytest.raises(EmptyGraph):
        build_pop(Instance(2, (), (0, 1), 0, 1, 1), BASIC)


@pytest.mark.parametrize("seed", range(30))
def test_count_laws(seed):
    inst = random_instance(seed, max_nodes=20, max_hop=6)
    for variant in (BASIC, POP1, POP2):
        model, index = build_pop(inst, variant)
        assert model.num_columns == column_count(inst)
        assert len(index.g_index) == (inst.hop_limit - 1) * (inst.node_count - 1)
        assert model.num_rows <= row_count_bound(inst)


def test_star_decode():
    model, index = build_pop(STAR, POP2)
    x = np.array([c.lb for c in model.columns])
    x[index.x_index[(0, 1)]] = 1.0
    assert not model.violations(x)
    tree = decode_solution(STAR, index, x)
    assert tree.arcs == ((0, 1),)
    assert tree.depth[1] == 1
    assert tree.objective == STAR.revenues[0] + 5
    assert model.objective_value(x) == tree.objective


def test_zero_assignment_decodes_to_root():
    model, index = build_pop(STAR, BASIC)
    tree = decode_solution(STAR, index, np.zeros(model.num_columns))
    assert tree.arcs == () and tree.objective == STAR.revenues[0]


def test_two_parents_is_not_a_tree():
    inst = Instance(3, ((0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)), (0, 1, 1), 0, 5, 2)
    model, index = build_pop(inst, BASIC)
    x = np.zeros(model.num_columns)
    x[index.x_index[(0, 2)]] = x[index.x_index[(1, 2)]] = x[index.x_index[(0, 1)]] = 1.0
    with pytest.raises(NotATree):
        decode_solution(inst, index, x)


def test_fractional_assignment_rejected():
    model, index = build_pop(STAR, BASIC)
    with pytest.raises(ValueError):
        decode_solution(STAR, index, np.full(model.num_columns, 0.5))


def test_strengthening_fixings():
    # path r-a-b-c with H=3: pi_b >= 2 and pi_c >= 3; a carries no revenue
    inst = Instance(4, ((0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)), (0, 0, 2, 3), 0, 5, 3)
    _, basic = build_pop(inst, BASIC)
    _, index = build_pop(inst, POP1)
    assert index.fixed_g[(1, 2)] == 1
    assert index.fixed_g[(1, 3)] == 1 and index.fixed_g[(2, 3)] == 1
    assert index.fixed_g[(2, 1)] == 0
    assert (1, 2) not in basic.fixed_g


def test_root_cut_and_leaf_rows():
    model, _ = build_pop(STAR, POP1)
    assert "rootcut" in [r.name for r in model.rows]
    inst = Instance(3, ((0, 1, 1.0), (1, 2, 1.0)), (0, 4, 6), 0, 5, 3)
    model, index = build_pop(inst, POP2)
    names = [r.name for r in model.rows]
    assert "leafsym_2" in names
    # node 3 has no way out, so its row collapses to the fixing pi_3 = H
    assert index.fixed_g[(2, 2)] == 1
    assert not any(n.startswith("leafsym") for n in (r.name for r in build_pop(inst, POP1)[0].rows))


def test_no_root_cut_without_affordable_edge():
    inst = Instance(2, ((0, 1, 5.0),), (1, 9), 0, 4, 1)
    model, _ = build_pop(inst, POP2)
    assert "rootcut" not in [r.name for r in model.rows]


@pytest.mark.parametrize("variant", [BASIC, POP1, POP2], ids=lambda v: v.name)
def test_start_assignment_feasible_on_corpus(variant):
    for inst in corpus(80, seed=11):
        model, index = build_pop(inst, variant)
        x = start_assignment(inst, model, index)
        assert model.violations(x) == []
        tree = decode_solution(inst, index, x)
        pos = implied_positions(index, x)
        assert all(tree.depth[v] <= pos[v] <= inst.hop_limit for v in tree.depth if v != inst.root)
