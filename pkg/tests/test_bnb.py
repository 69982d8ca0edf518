import json
import math

import numpy as np
import pytest

from corpus import STAR, corpus
from stprbh.bnb import INFEASIBLE_STATUS, LIMIT, OPTIMAL, SolveParams, relative_gap, solve_milp
from stprbh.instance import Instance
from stprbh.milp import Column, MilpModel, Row
from stprbh.popmodel import POP1, POP2, build_pop, start_assignment
from stprbh.verify import brute_force


def solve(inst, variant=POP2, **kw):
    model, index = build_pop(inst, variant)
    return solve_milp(model, SolveParams(**kw), start=start_assignment(inst, model, index)), model


def test_star():
    report, _ = solve(STAR)
    assert report.status == OPTIMAL
    assert report.lb == STAR.revenues[0] + 5
    assert report.gap <= 1e-5


def test_budget_below_every_root_edge():
    inst = Instance(3, ((0, 1, 3.0), (1, 2, 1.0)), (4, 5, 6), 0, 2, 2)
    report, _ = solve(inst)
    assert report.status == OPTIMAL and report.lb == 4
    assert report.nodes <= 1


def test_without_start():
    model, _ = build_pop(STAR, POP1)
    report = solve_milp(model)
    assert report.status == OPTIMAL and report.lb == 7


def test_infeasible_model():
    model = MilpModel(
        (Column("a"), Column("b")),
        (Row("r", ((0, 1.0), (1, 1.0)), "=", 1.0), Row("s", ((0, 1.0), (1, -1.0)), "=", 0.0)),
        ((0, 1.0),),
    )
    assert solve_milp(model).status == INFEASIBLE_STATUS


def test_knapsack_needs_branching():
    w = [3.0, 4.0, 5.0, 6.0]
    v = [4.0, 5.0, 6.0, 7.0]
    model = MilpModel(
        tuple(Column(f"y{j}") for j in range(4)),
        (Row("cap", tuple(enumerate(w)), "<=", 10.0),),
        tuple(enumerate(v)),
    )
    report = solve_milp(model)
    best = max(
        sum(v[j] for j in range(4) if k >> j & 1)
        for k in range(16)
        if sum(w[j] for j in range(4) if k >> j & 1) <= 10
    )
    assert report.status == OPTIMAL and report.lb == best
    assert model.violations(report.incumbent) == []


def test_time_limit_zero_returns_start():
    report, model = solve(STAR, POP1, time_limit_seconds=0.0)
    assert report.status == LIMIT
    assert report.lb >= STAR.revenues[0]
    assert model.violations(report.incumbent) == []


def test_node_limit():
    inst = corpus(1, seed=5)[0]
    report, _ = solve(inst, node_limit=0)
    assert report.status in (LIMIT, OPTIMAL)
    assert report.nodes == 0


def test_bad_start_rejected():
    model, _ = build_pop(STAR, POP1)
    with pytest.raises(ValueError):
        solve_milp(model, start=np.ones(model.num_columns))


def test_params_validation():
    with pytest.raises(ValueError):
        SolveParams(mip_gap=-1)
    with pytest.raises(ValueError):
        SolveParams(branching_rule="random")


def test_gap_formula():
    assert relative_gap(9.0, 10.0) == pytest.approx(0.1)
    assert relative_gap(0.0, 0.5) == pytest.approx(0.5)
    assert math.isinf(relative_gap(-math.inf, 1.0))


def test_report_json():
    report, _ = solve(STAR)
    data = json.loads(report.to_json())
    assert data["status"] == "optimal" and data["lb"] == 7
    assert "trace" not in data


@pytest.mark.parametrize("rule", ["most-fractional", "pseudo-cost-lite"])
def test_rules_agree_with_oracle(rule):
    for inst in corpus(40, seed=21):
        report, _ = solve(inst, branching_rule=rule)
        assert report.status == OPTIMAL
        assert report.lb == brute_force(inst)[1]


def test_anytime_soundness():
    for inst in corpus(40, seed=23):
        report, _ = solve(inst)
        for local, incumbent, bound in report.trace:
            assert incumbent <= bound + 1e-6
            assert local <= bound + 1e-6
        assert report.lb <= report.ub + 1e-9


def test_deterministic():
    inst = corpus(1, seed=31)[0]
    a, _ = solve(inst, branching_rule="pseudo-cost-lite", seed=4)
    b, _ = solve(inst, branching_rule="pseudo-cost-lite", seed=4)
    assert a.incumbent == b.incumbent and a.nodes == b.nodes


def test_integral_objective_bound_is_rounded():
    for inst in corpus(20, seed=29):
        report, _ = solve(inst, node_limit=1)
        if report.status == LIMIT and math.isfinite(report.ub):
            assert report.ub == math.floor(report.ub)


def test_fractional_costs_not_rounded():
    # same knapsack with half-unit values: the optimum is not an integer
    w = [3.0, 4.0, 5.0, 6.0]
    v = [4.5, 5.5, 6.5, 7.5]
    model = MilpModel(
        tuple(Column(f"y{j}") for j in range(4)),
        (Row("cap", tuple(enumerate(w)), "<=", 10.0),),
        tuple(enumerate(v)),
    )
    report = solve_milp(model)
    assert report.status == OPTIMAL and report.lb == 13.0
    assert solve_milp(model, SolveParams(node_limit=1)).ub == pytest.approx(13.9)
