import csv
import io
import json
from pathlib import Path

import pytest

from corpus import STAR, corpus
from stprbh.cli import format_solution, main, parse_solution
from stprbh.instance import Instance, read_stp, write_stp
from stprbh.verify import brute_force

GOLDEN = Path(__file__).parent / "fixtures" / "golden"
HEADER = "instance,V,E,Vr,Er,variant,status,lb,ub,time_s"


@pytest.fixture
def star_file(tmp_path):
    p = tmp_path / "star.stp"
    p.write_text(write_stp(STAR))
    return p


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize("variant", ["pop1", "pop1r", "pop2", "pop2r"])
def test_solve_star(capsys, star_file, variant):
    code, out, _ = run(capsys, "solve", star_file, "--variant", variant)
    data = json.loads(out)
    assert code == 0
    assert data["status"] == "optimal" and data["objective"] == 7
    assert data["arcs"] == [[1, 2]] and data["valid"]


def test_solve_time_limit_zero(capsys, star_file):
    code, out, _ = run(capsys, "solve", star_file, "--variant", "pop1", "--time-limit", "0")
    data = json.loads(out)
    assert code == 2 and data["status"] == "limit"
    assert data["lb"] >= STAR.revenues[0]


def test_solve_output_is_deterministic(capsys, tmp_path):
    inst = corpus(1, seed=8)[0]
    p = tmp_path / "i.stp"
    p.write_text(write_stp(inst))
    outs = []
    for _ in range(2):
        _, out, _ = run(capsys, "solve", p)
        data = json.loads(out)
        data.pop("timing")
        outs.append(data)
    assert outs[0] == outs[1]


def test_solve_missing_file(capsys, tmp_path):
    code, _, err = run(capsys, "solve", tmp_path / "nope.stp")
    assert code == 1 and "nope.stp" in err


def test_solve_parse_error(capsys, tmp_path):
    p = tmp_path / "bad.stp"
    p.write_text("SECTION Terminals\nEND\n")
    code, _, err = run(capsys, "solve", p)
    assert code == 1 and "Graph" in err


def test_solution_round_trip(capsys, tmp_path):
    for k, inst in enumerate(corpus(8, seed=13)):
        p = tmp_path / f"i{k}.stp"
        sol = tmp_path / f"i{k}.sol"
        p.write_text(write_stp(inst))
        code, out, _ = run(capsys, "solve", p, "--variant", "pop2r", "--write-solution", sol)
        assert code == 0
        assert json.loads(out)["objective"] == brute_force(inst)[1]
        code, out, _ = run(capsys, "verify", p, sol)
        assert code == 0 and json.loads(out)["valid"]


def test_verify_negative_files(capsys, tmp_path):
    inst = Instance(4, ((0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)), (0, 1, 1, 1), 0, 2, 2)
    p = tmp_path / "path.stp"
    p.write_text(write_stp(inst))
    sol = tmp_path / "s.sol"
    sol.write_text("OBJ 3\nARC 1 2\nARC 2 3\nARC 3 4\n")
    code, out, _ = run(capsys, "verify", p, sol)
    violations = json.loads(out)["violations"]
    assert code == 3
    assert any("hop limit exceeded" in v for v in violations)
    assert any("budget exceeded" in v for v in violations)


def test_solution_text_format():
    tree = parse_solution("OBJ 7\n# comment\nARC 1 2\n")
    assert tree.arcs == ((0, 1),) and tree.objective == 7
    with pytest.raises(ValueError):
        parse_solution("ARC 1\n")
    assert format_solution(tree) == "OBJ 7\nARC 1 2\n"


def test_export_golden(capsys, star_file, tmp_path):
    out = tmp_path / "star.lp"
    assert main(["export", str(star_file), "--format", "lp", "--variant", "pop2", "--out", str(out)]) == 0
    assert out.read_text() == (GOLDEN / "star_pop2.lp").read_text()
    code, text, _ = run(capsys, "export", star_file, "--format", "mps")
    assert text == (GOLDEN / "star_pop2.mps").read_text()


def test_reduce_triangle(capsys, tmp_path):
    inst = Instance(3, ((0, 1, 1.0), (0, 2, 1.0), (1, 2, 3.0)), (0, 1, 1), 0, 10, 2, "tri")
    p = tmp_path / "tri.stp"
    p.write_text(write_stp(inst))
    out, log = tmp_path / "red.stp", tmp_path / "red.json"
    code, text, _ = run(capsys, "reduce", p, "--out", out, "--log", log)
    assert code == 0 and json.loads(text)["removed_edges"] == 1
    assert read_stp(out).edge_count == 2
    assert len(json.loads(log.read_text())["removed_edges"]) == 1
    # reducing again removes nothing
    code, text, _ = run(capsys, "reduce", out, "--out", tmp_path / "again.stp")
    assert json.loads(text)["removed_edges"] == 0


def test_bench(capsys, tmp_path):
    for k, inst in enumerate(corpus(5, seed=17)):
        (tmp_path / f"i{k}.stp").write_text(write_stp(inst))
    code, out, _ = run(capsys, "bench", tmp_path)
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and ",".join(rows[0]) == HEADER
    assert len(rows) == 6 and all(r[6] == "optimal" for r in rows[1:])
    code, out, _ = run(capsys, "bench", tmp_path, "--variants", "pop1,pop2r", "--threads", "2")
    assert len(out.splitlines()) == 11


def test_bench_empty_dir(capsys, tmp_path):
    code, out, _ = run(capsys, "bench", tmp_path)
    assert code == 0 and out == HEADER + "\n"


def test_bench_missing_dir(capsys, tmp_path):
    code, _, err = run(capsys, "bench", tmp_path / "absent")
    assert code == 1 and "not a directory" in err


def test_generate(capsys, tmp_path):
    base = tmp_path / "b01.stp"
    base.write_text("SECTION Graph\nNodes 3\nEdges 2\nE 1 2 4\nE 2 3 6\nEND\nSECTION Terminals\nT 2\nT 3\nEND\nEOF\n")
    code, out, _ = run(capsys, "generate", base, "--revenue-cap", "10", "--budget-divisor", "5", "--hop-limit", "3")
    assert code == 0
    text = tmp_path / "gen.stp"
    text.write_text(out)
    inst = read_stp(text)
    assert inst.name == "b01-10-3" and inst.budget == 2 and inst.root == 1
