import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from src.main import create_cli

DATA_DIR = Path(__file__).resolve().parents[1] / "data"


def data(name):
    return str(DATA_DIR / name)


@pytest.fixture
def run():
    cli = create_cli()
    runner = CliRunner()

    def invoke(*args):
        return runner.invoke(cli, list(args))

    return invoke


def test_feasible_loomis_whitney(run):
    result = run("feasible", data("loomis_whitney.json"))
    assert result.exit_code == 0
    assert json.loads(result.output)["verdict"] == "feasible"


def test_feasible_duplicated_rows_prints_witness(run):
    result = run("feasible", data("duplicated_rows.json"))
    assert result.exit_code == 3
    payload = json.loads(result.output)
    assert payload["verdict"] == "infeasible"
    assert payload["witness"] == [["0", "1"]]
    assert payload["lhs_dim"] == 1
    assert payload["rhs_value"] == "0"


def test_feasible_scaling_violation(run):
    result = run("feasible", data("scaling_violation.json"))
    assert result.exit_code == 3
    payload = json.loads(result.output)
    assert payload["witness"] is None
    assert payload["lhs_dim"] is None and payload["rhs_value"] is None
    assert payload["details"] == {"ok": False, "weighted_dims": 1, "target": 2}


def test_feasible_human_format(run):
    result = run("--format", "human", "feasible", data("rank1_uniform.json"))
    assert result.exit_code == 0
    assert "verdict: feasible" in result.output.splitlines()


def test_constant_loomis_whitney(run):
    result = run("constant", data("loomis_whitney.json"))
    assert result.exit_code == 0
    payload = json.loads(result.output)
    assert payload["status"] == "finite"
    assert payload["value"] == pytest.approx(1.0, rel=0.01)
    assert payload["reverse"] == pytest.approx(1.0 / payload["value"])


def test_constant_scaled_loomis_whitney(run):
    result = run("constant", data("scaled_loomis_whitney.json"))
    assert result.exit_code == 0
    assert json.loads(result.output)["value"] == pytest.approx(1.0 / 27.0, rel=0.01)


def test_constant_infinite(run):
    result = run("constant", data("duplicated_rows.json"))
    assert result.exit_code == 3
    payload = json.loads(result.output)
    assert payload["status"] == "infinite"
    assert payload["value"] == "inf"
    assert payload["reverse"] == 0.0


def test_constant_is_deterministic(run):
    first = run("constant", data("holder.json"))
    second = run("constant", data("holder.json"))
    assert first.exit_code == second.exit_code == 0
    assert first.output == second.output


def test_constant_trace(run):
    result = run("--trace", "constant", data("holder.json"))
    assert result.exit_code == 0
    trace = json.loads(result.output)["trace"]
    assert trace["steps"] == len(trace["ds_history"]) - 1


def test_scale_csv(run):
    result = run("--format", "csv", "scale", data("loomis_whitney.json"))
    assert result.exit_code == 0
    lines = result.output.splitlines()
    assert lines == ["step,g,bl_estimate", "0,0,1"]


def test_scale_json_lines(run):
    result = run("scale", data("scaled_loomis_whitney.json"))
    assert result.exit_code == 0
    rows = [json.loads(line) for line in result.output.splitlines()]
    assert [row["step"] for row in rows] == [0, 1]
    assert rows[0]["g"] > 0
    assert rows[0]["bl_estimate"] == pytest.approx(1.0 / 27.0)
    assert rows[-1]["bl_estimate"] == pytest.approx(1.0)


def test_scale_trace_appends_final_factors(run):
    result = run("--trace", "scale", data("scaled_loomis_whitney.json"))
    assert result.exit_code == 0
    rows = [json.loads(line) for line in result.output.splitlines()]
    summary = rows[-1]
    assert summary["event"] == "final factors"
    assert summary["steps"] == 1
    assert summary["final_g"] == pytest.approx(rows[-2]["g"])
    assert len(summary["left_factors"]) == 3


def test_scale_singular_normalization(run):
    result = run("scale", data("duplicated_rows.json"))
    assert result.exit_code == 3
    row = json.loads(result.output)
    assert row["event"] == "singular normalization"
    assert row["step"] == 1
    assert row["witness"] == [["0", "1"]]


def test_scale_step_cap_is_inconclusive(run):
    result = run("--max-steps", "1", "scale", data("rank1_skewed.json"))
    assert result.exit_code == 4
    rows = [json.loads(line) for line in result.output.splitlines()]
    assert len(rows) == 2
    assert rows[1]["g"] == pytest.approx(3.0 / 8.0)
    assert rows[1]["g"] > 1e-8
    assert rows[-1]["bl_estimate"] is None


def test_scale_skewed_rank_one_converges_with_budget(run):
    result = run("scale", data("rank1_skewed.json"))
    assert result.exit_code == 0
    rows = [json.loads(line) for line in result.output.splitlines()]
    assert len(rows) > 2
    assert rows[-1]["g"] <= 1e-8
    assert rows[-1]["bl_estimate"] is not None


def test_capacity_examples(run):
    identity = run("capacity", data("identity_operator.json"))
    assert identity.exit_code == 0
    payload = json.loads(identity.output)
    assert payload["verdict"] == "yes"
    assert payload["capacity"] == pytest.approx(1.0, rel=0.01)

    pinching = run("capacity", data("pinching_operator.json"))
    assert pinching.exit_code == 0
    assert json.loads(pinching.output)["capacity"] == pytest.approx(1.0, rel=0.01)


def test_capacity_rank_decreasing(run):
    result = run("capacity", data("rank_decreasing_operator.json"))
    assert result.exit_code == 3
    payload = json.loads(result.output)
    assert payload["verdict"] == "no"
    assert payload["capacity"] == 0.0
    assert payload["rank_verdict"]["verdict"] == "no"


def test_polytope_rank1_with_oracle(run):
    result = run("--oracle", "polytope", "rank1", data("rank1_family.json"), "--p", "2/3,2/3,2/3")
    assert result.exit_code == 0
    payload = json.loads(result.output)
    assert payload["verdict"] == "inside"
    assert payload["oracle"]["verdict"] == "inside"
    assert payload["oracle"]["weights"] == ["1/3", "1/3", "1/3"]
    assert payload["agree"] is True


def test_polytope_rank1_outside(run):
    result = run("--oracle", "polytope", "rank1", data("rank1_family.json"), "--p", "1,1,1")
    assert result.exit_code == 3
    payload = json.loads(result.output)
    assert payload["verdict"] == "outside"
    assert payload["agree"] is True


def test_polytope_matroid(run):
    inside = run("--oracle", "polytope", "matroid", data("matroid_v.json"), data("matroid_w.json"))
    assert inside.exit_code == 0
    assert json.loads(inside.output)["agree"] is True

    outside = run("polytope", "matroid", data("matroid_v.json"), data("matroid_w.json"), "--p", "3/2,1/2")
    assert outside.exit_code == 3
    assert json.loads(outside.output)["witness"] == [["0", "1", "0", "0"], ["0", "0", "0", "1"]]


def test_input_errors_exit_one(run, tmp_path):
    broken = tmp_path / "broken.json"
    broken.write_text("{\"n\": 2,", encoding="utf-8")

    result = run("feasible", str(broken))
    assert result.exit_code == 1
    assert "input error" in result.output

    assert run("feasible", str(tmp_path / "absent.json")).exit_code == 1
    assert run("--eps", "2", "constant", data("holder.json")).exit_code == 1
    assert run("polytope", "rank1", data("rank1_family.json"), "--p", "1,x").exit_code == 1
    assert run("polytope", "rank1", data("rank1_family.json"), "--p", "1,1").exit_code == 1


def test_capacity_high_precision_records_run_settings(run):
    result = run("--precision", "96", "--seed", "7", "capacity", data("pinching_operator.json"))
    assert result.exit_code == 0
    payload = json.loads(result.output)
    assert payload["capacity"] == pytest.approx(1.0, rel=0.01)
    assert payload["run"] == {"seed": 7, "precision": 96}

    assert json.loads(run("feasible", data("loomis_whitney.json")).output)["run"]["precision"] is None
    assert run("--precision", "20", "capacity", data("pinching_operator.json")).exit_code == 1
