"""run_analysis: 서브커맨드 출력 형식과 종료 코드 테스트."""

import csv
import io
import json
from fractions import Fraction

from escapeEngine.crossover import density_crossover
from escapeEngine.run_analysis import (
    EXIT_BUDGET,
    EXIT_FAILED,
    EXIT_INVALID,
    EXIT_OK,
    EXIT_OUTPUT,
    EXIT_USAGE,
    main,
)

DIAMOND = "4 4\n0 1\n0 2\n1 3\n2 3\n0\n3\n"
CHAIN = "4 3\n0 1\n1 2\n2 3\n0\nh: 3 3 1 0\n"


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def test_expect_brfs(capsys):
    code, out = run(capsys, "expect", "--alg", "brfs", "--b", "4", "--depth", "6", "--goals", "1")
    assert code == EXIT_OK
    assert out == "6827/2 (3413.500000)\n"


def test_expect_rrw_saturated(capsys):
    code, out = run(capsys, "expect", "--alg", "rrw", "--b", "4", "--depth", "6",
                    "--goals", "4096", "--error", "1")
    assert code == EXIT_OK
    assert out == "7 (7.000000)\n"


def test_expect_rejects_fractional_walk_depth(capsys):
    code, out = run(capsys, "expect", "--alg", "rrw", "--b", "4", "--depth", "6",
                    "--goals", "16", "--error", "1.25")
    assert code == EXIT_INVALID
    assert out == ""


def test_expect_both_json(capsys):
    code, out = run(capsys, "expect", "--alg", "both", "--b", "4", "--depth", "6",
                    "--goals", "16", "--format", "json")
    assert code == EXIT_OK
    records = json.loads(out)
    assert [r["alg"] for r in records] == ["brfs", "rrw"]
    assert Fraction(records[0]["value_exact"]) == 1606
    assert Fraction(records[1]["value_exact"]) == 1537


def test_expect_graph_file(tmp_path, capsys):
    path = tmp_path / "diamond.txt"
    path.write_text(DIAMOND, encoding="utf-8")
    code, out = run(capsys, "expect", "--alg", "both", "--file", str(path), "--error", "1")
    assert code == EXIT_OK
    # N_O=3, N=1, g=1 -> 3 + 1; s=1 -> 2 + 1
    assert out == "brfs: 4 (4.000000)\nrrw: 3 (3.000000)\n"


def test_crossover_reference(capsys):
    code, out = run(capsys, "crossover", "--b", "4", "--depth", "6", "--error", "1")
    assert code == EXIT_OK
    assert "bound=16\n" in out
    assert "exact=16\n" in out
    assert "density=1/256\n" in out


def test_crossover_single_level_note(capsys):
    code, out = run(capsys, "crossover", "--b", "4", "--depth", "1", "--error", "1")
    assert code == EXIT_OK
    assert "exact=4\n" in out
    assert "note=d*=1" in out


def test_sweep_density_csv(capsys):
    code, out = run(capsys, "sweep", "--kind", "density", "--b", "4", "--depths", "2..8",
                    "--errors", "1", "--format", "csv")
    assert code == EXIT_OK
    rows = list(csv.DictReader(io.StringIO(out)))
    assert out.splitlines()[0] == "x,series,value_exact,value_decimal"
    assert len(rows) == 7
    values = [Fraction(r["value_exact"]) for r in rows]
    assert all(a > b for a, b in zip(values, values[1:]))
    assert rows[0]["value_exact"] == "5/16"
    assert rows[0]["value_decimal"] == "0.312500"


def test_sweep_tests_row_count(capsys):
    code, out = run(capsys, "sweep", "--kind", "tests", "--b", "4", "--depth", "6",
                    "--errors", "1", "--goals", "1..64", "--format", "csv")
    assert code == EXIT_OK
    assert len(out.splitlines()) == 1 + 2 * 64


def test_sweep_crossover_bound_not_below_exact(capsys):
    code, out = run(capsys, "sweep", "--kind", "crossover", "--b", "4", "--depths", "2..8",
                    "--errors", "1", "--format", "csv")
    assert code == EXIT_OK
    rows = list(csv.DictReader(io.StringIO(out)))
    bound = {r["x"]: Fraction(r["value_exact"]) for r in rows if r["series"] == "bound e=1"}
    exact = {r["x"]: Fraction(r["value_exact"]) for r in rows if r["series"] == "exact e=1"}
    assert len(bound) == len(exact) == 7
    assert all(bound[x] >= exact[x] for x in bound)


def test_sweep_json_round_trip(capsys):
    code, out = run(capsys, "sweep", "--kind", "density", "--b", "4", "--depths", "2..8",
                    "--errors", "1,2", "--format", "json")
    assert code == EXIT_OK
    for row in json.loads(out):
        e = Fraction(row["series"].split("=", 1)[1])
        assert Fraction(row["value_exact"]) == density_crossover(4, int(row["x"]), e)


def test_sweep_writes_output_file(tmp_path, capsys):
    target = tmp_path / "density.csv"
    code, out = run(capsys, "sweep", "--kind", "density", "--b", "4", "--depths", "2..4",
                    "--format", "csv", "--out", str(target))
    assert code == EXIT_OK
    assert out == ""
    assert target.read_text(encoding="utf-8").startswith("x,series,value_exact,value_decimal\n")


def test_unwritable_output_path(tmp_path, capsys):
    target = tmp_path / "missing" / "density.csv"
    code, _ = run(capsys, "sweep", "--kind", "density", "--b", "4", "--depths", "2..4",
                  "--out", str(target))
    assert code == EXIT_OUTPUT


def test_simulate_requires_seed(capsys):
    code, out = run(capsys, "simulate", "--alg", "rrw", "--b", "2", "--depth", "3",
                    "--goals", "1", "--error", "1", "--trials", "100")
    assert code == EXIT_USAGE
    assert out == ""


def test_simulate_is_byte_identical(capsys):
    argv = ["simulate", "--alg", "rrw", "--b", "2", "--depth", "3", "--goals", "1",
            "--error", "1", "--trials", "1000", "--seed", "9"]
    code1, out1 = run(capsys, *argv)
    code2, out2 = run(capsys, *argv)
    assert code1 == code2 == EXIT_OK
    assert out1 == out2
    assert "trials=1000\n" in out1
    assert "base_seed=9\n" in out1


def test_simulate_nondeterministic_prints_seed(capsys):
    code, out = run(capsys, "simulate", "--alg", "brfs", "--b", "2", "--depth", "2",
                    "--goals", "1", "--trials", "50", "--nondeterministic", "--format", "json")
    assert code == EXIT_OK
    data = json.loads(out)
    assert 0 <= data["base_seed"] < 2 ** 64


def test_simulate_budget_failures_exit_code(capsys):
    code, out = run(capsys, "simulate", "--alg", "rrw", "--b", "4", "--depth", "4",
                    "--goals", "1", "--error", "1", "--trials", "200", "--seed", "4",
                    "--max-walks", "200", "--format", "json")
    assert code == EXIT_BUDGET
    data = json.loads(out)
    assert data["budget_failures"] > 0
    assert data["trials"] + data["budget_failures"] == 200


def test_validate_saturated_rrw(capsys):
    code, out = run(capsys, "validate", "--alg", "rrw", "--b", "4", "--depth", "6",
                    "--goals", "4096", "--error", "1", "--trials", "100", "--seed", "1")
    assert code == EXIT_OK
    assert "variance=0\n" in out
    assert "pass=true\n" in out


def test_validate_small_brfs(capsys):
    code, out = run(capsys, "validate", "--alg", "brfs", "--b", "2", "--depth", "1",
                    "--goals", "1", "--trials", "20000", "--seed", "7", "--format", "json")
    assert code == EXIT_OK
    data = json.loads(out)
    assert data["analytic"] == "5/2"
    assert data["pass"] is True


def test_validate_statistical_failure(capsys):
    # 통과 기준 0: 분산이 있는 추정은 반드시 실패
    code, out = run(capsys, "validate", "--alg", "brfs", "--b", "2", "--depth", "2",
                    "--goals", "1", "--trials", "501", "--seed", "3", "--z-threshold", "0")
    assert code == EXIT_FAILED
    assert "pass=false\n" in out


def test_bad_flags(capsys):
    assert main(["expect", "--bogus"]) == EXIT_USAGE
    assert main(["crossover", "--depth", "6"]) == EXIT_USAGE
    assert main(["simulate", "--b", "2", "--depth", "1", "--goals", "1", "--seed", "1"]) == EXIT_USAGE
    assert main(["simulate", "--b", "2", "--depth", "1", "--goals", "1", "--trials", "10",
                 "--seed", "-1"]) == EXIT_USAGE


def test_graph_run_brfs(tmp_path, capsys):
    path = tmp_path / "diamond.txt"
    path.write_text(DIAMOND, encoding="utf-8")
    code, out = run(capsys, "graph-run", "--file", str(path), "--alg", "brfs")
    assert code == EXIT_OK
    assert "goal_tests=4\n" in out
    assert "successor_generations=3\n" in out
    assert "path=0 1 3\n" in out


def test_graph_run_rrw_needs_seed(tmp_path, capsys):
    path = tmp_path / "diamond.txt"
    path.write_text(DIAMOND, encoding="utf-8")
    assert main(["graph-run", "--file", str(path), "--alg", "rrw"]) == EXIT_USAGE
    code, out = run(capsys, "graph-run", "--file", str(path), "--alg", "rrw", "--seed", "3")
    assert code == EXIT_OK
    assert "goal_tests=3\n" in out


def test_graph_run_dead_end(tmp_path, capsys):
    # 0 -> 2 경로는 깊이 1에서 막힘
    path = tmp_path / "dead.txt"
    path.write_text("3 2\n0 1\n0 2\n0\n1\n", encoding="utf-8")
    codes = {main(["graph-run", "--file", str(path), "--alg", "rrw", "--error", "2",
                   "--seed", str(seed)]) for seed in range(20)}
    assert EXIT_BUDGET in codes
    assert codes <= {EXIT_OK, EXIT_BUDGET}


def test_graph_run_missing_file(tmp_path, capsys):
    code, _ = run(capsys, "graph-run", "--file", str(tmp_path / "none.txt"))
    assert code == EXIT_INVALID


def test_escape_chain(tmp_path, capsys):
    path = tmp_path / "chain.txt"
    path.write_text(CHAIN, encoding="utf-8")
    code, out = run(capsys, "escape", "--file", str(path), "--alg", "brfs")
    assert code == EXIT_OK
    assert "trajectory=0 2 3\n" in out
    assert "reached_zero=true\n" in out
    assert "goal_tests=5\n" in out


def test_escape_requires_heuristic(tmp_path, capsys):
    path = tmp_path / "diamond.txt"
    path.write_text(DIAMOND, encoding="utf-8")
    code, _ = run(capsys, "escape", "--file", str(path))
    assert code == EXIT_INVALID


def test_sweep_default_errors_skip_fractional_walk_depth(capsys):
    code, out = run(capsys, "sweep", "--kind", "tests", "--b", "4", "--depth", "3",
                    "--goals", "1..2", "--format", "csv")
    assert code == EXIT_OK
    rows = list(csv.DictReader(io.StringIO(out)))
    assert sorted({r["series"] for r in rows}) == ["brfs", "rrw e=1", "rrw e=2"]
    assert len(rows) == 6


def test_simulate_rrw_larger_depth_error_exits_ok(capsys):
    code, out = run(capsys, "simulate", "--alg", "rrw", "--b", "2", "--depth", "2",
                    "--goals", "1", "--error", "2", "--trials", "500", "--seed", "9")
    assert code == EXIT_OK
    assert "accounting_violations=0\n" in out
    assert "budget_failures=0\n" in out


def test_validate_rrw_larger_depth_error(capsys):
    code, out = run(capsys, "validate", "--alg", "rrw", "--b", "2", "--depth", "2",
                    "--goals", "1", "--error", "2", "--trials", "2000", "--seed", "3",
                    "--format", "json")
    assert code == EXIT_OK
    data = json.loads(out)
    assert data["analytic"] == "15"
    assert data["accounting_violations"] == 0
    assert data["pass"] is True
