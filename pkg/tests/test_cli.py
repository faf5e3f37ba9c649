"""Command-line tests, run in process through ``main(argv)``.

Exit-code contract: 0 success, 2 inadmissible (check only), 1 any
operational error including usage errors. Analytical stdout must be
byte-identical across reruns; the timestamp goes to stderr alone.
"""

import json

import numpy as np
import pytest

from mpatools.cli import main
from mpatools.io import read_oracle

FIG2_DAG = """
dag {
  X -> Z
  X -> Y
  Z -> Y
  X -> R
  W -> Z
  W -> Y
}
roles {
  treatment Z
  outcome Y
  confounder X partial
  confounder W full
  missing R of X
}
"""

OUTCOME_DRIVEN_DAG = """
dag {
  X -> Z
  X -> Y
  Z -> Y
  Y -> R
}
roles {
  treatment Z
  outcome Y
  confounder X partial
  missing R of X
}
"""

MODS_TOML = """
[[pattern]]
bits = { X = 0 }
absent = [["X", "Z"]]
"""

SCENARIO_TOML = """
name = "filed"

[graph]
dag_file = "g.dag"

[[mechanism]]
node = "X"
kind = "gaussian"

[[mechanism]]
node = "W"
kind = "gaussian"

[[mechanism]]
node = "R"
kind = "logistic"
intercept = 0.5
[mechanism.coef]
X = 0.7

[[mechanism]]
node = "Z"
kind = "logistic"
intercept = -0.2
[mechanism.coef]
X = 0.9
W = 0.6
[mechanism.when_missing.R]
X = 0.0

[[mechanism]]
node = "Y"
kind = "logistic"
intercept = -1.1
[mechanism.coef]
X = 0.8
W = 0.5
Z = 0.9
"""


@pytest.fixture
def fig2_graph(tmp_path):
    path = tmp_path / "fig2.dag"
    path.write_text(FIG2_DAG, encoding="utf-8")
    return str(path)


@pytest.fixture
def mods_file(tmp_path):
    path = tmp_path / "mods.toml"
    path.write_text(MODS_TOML, encoding="utf-8")
    return str(path)


def run(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------


class TestCheck:
    def test_admissible_with_mods_exits_zero(self, capsys, fig2_graph, mods_file):
        code, out, err = run(
            capsys, ["check", "--graph", fig2_graph, "--mods", mods_file]
        )
        assert code == 0
        assert "admissible via CIT" in out
        assert "run manifest" in out
        assert "sha256" in out
        assert "# finished at" in err and "# finished at" not in out

    def test_without_mods_unassessed_patterns_fail_closed(self, capsys, fig2_graph):
        code, out, _ = run(capsys, ["check", "--graph", fig2_graph])
        assert code == 2
        assert "inadmissible (unassessed patterns: R=0)" in out

    def test_asserting_the_unchanged_structure_fails_both_routes(
        self, capsys, tmp_path, fig2_graph
    ):
        mods = tmp_path / "same.toml"
        mods.write_text("[[pattern]]\nbits = { X = 0 }\n", encoding="utf-8")
        code, out, _ = run(
            capsys, ["check", "--graph", fig2_graph, "--mods", str(mods)]
        )
        assert code == 2
        assert "inadmissible (pattern R=0: neither CIT nor CIO holds)" in out

    def test_outcome_driven_missingness_exits_two(self, capsys, tmp_path):
        path = tmp_path / "g.dag"
        path.write_text(OUTCOME_DRIVEN_DAG, encoding="utf-8")
        code, out, _ = run(capsys, ["check", "--graph", str(path)])
        assert code == 2
        assert "inadmissible (scenario I: the outcome causes missingness)" in out

    def test_json_payload(self, capsys, fig2_graph, mods_file):
        code, out, _ = run(
            capsys,
            ["check", "--graph", fig2_graph, "--mods", mods_file, "--format", "json"],
        )
        assert code == 0
        payload = json.loads(out)
        assert payload["manifest"]["command"] == "check"
        assert set(payload["manifest"]["inputs"]) == {"graph", "mods"}
        assert payload["report"]["admissible"] is True
        assert payload["report"]["route"] == "CIT"
        assert isinstance(payload["narrative"], str)

    def test_roles_inline_and_as_file(self, capsys, tmp_path):
        dag_only = FIG2_DAG.split("roles")[0]
        roles_block = "roles" + FIG2_DAG.split("roles")[1]
        graph = tmp_path / "bare.dag"
        graph.write_text(dag_only, encoding="utf-8")
        code, out, _ = run(capsys, ["check", "--graph", str(graph), "--roles", roles_block])
        assert code == 2 and "inadmissible" in out

        roles_file = tmp_path / "roles.txt"
        roles_file.write_text(roles_block, encoding="utf-8")
        code, out, _ = run(
            capsys,
            ["check", "--graph", str(graph), "--roles", str(roles_file), "--format", "json"],
        )
        assert code == 2
        assert set(json.loads(out)["manifest"]["inputs"]) == {"graph", "roles"}

    def test_condition_on_is_recorded_and_validated(self, capsys, fig2_graph):
        code, out, _ = run(
            capsys,
            ["check", "--graph", fig2_graph, "--condition-on", "W", "--format", "json"],
        )
        assert code == 2
        assert json.loads(out)["manifest"]["params"]["condition_on"] == ["W"]

        code, _, err = run(capsys, ["check", "--graph", fig2_graph, "--condition-on", "Q"])
        assert code == 1
        assert "error:" in err and "Q" in err

    def test_out_file_copies_stdout(self, capsys, tmp_path, fig2_graph, mods_file):
        copy = tmp_path / "report.txt"
        _, out, _ = run(
            capsys,
            ["check", "--graph", fig2_graph, "--mods", mods_file, "--out", str(copy)],
        )
        assert copy.read_text(encoding="utf-8") == out

    def test_reruns_are_byte_identical(self, capsys, fig2_graph, mods_file):
        argv = ["check", "--graph", fig2_graph, "--mods", mods_file, "--format", "json"]
        _, first, _ = run(capsys, argv)
        _, second, _ = run(capsys, argv)
        assert first == second

    def test_missing_graph_file(self, capsys, tmp_path):
        code, _, err = run(capsys, ["check", "--graph", str(tmp_path / "no.dag")])
        assert code == 1
        assert "file not found" in err


# ---------------------------------------------------------------------------
# paths
# ---------------------------------------------------------------------------


class TestPaths:
    def test_open_and_blocked(self, capsys, fig2_graph):
        code, out, _ = run(capsys, ["paths", "Z", "Y", "--graph", fig2_graph])
        assert code == 0
        assert out.startswith("Z ⟂ Y\n")
        assert "d-separated: no" in out
        assert "Z -> Y" in out

        code, out, _ = run(
            capsys, ["paths", "R", "Y", "--graph", fig2_graph, "--condition-on", "X"]
        )
        assert code == 0
        assert out.startswith("R ⟂ Y | X\n")
        assert "d-separated: yes" in out

    def test_json_payload(self, capsys, fig2_graph):
        code, out, _ = run(
            capsys,
            ["paths", "R", "Y", "--graph", fig2_graph, "--condition-on", "X",
             "--format", "json"],
        )
        assert code == 0
        payload = json.loads(out)
        assert payload["statement"] == "R ⟂ Y | X"
        assert payload["separated"] is True
        assert payload["paths"]
        assert all(p["open"] is False for p in payload["paths"])
        assert all(p["nodes"][0] == "R" and p["nodes"][-1] == "Y" for p in payload["paths"])

    def test_unknown_node_is_an_error(self, capsys, fig2_graph):
        code, _, err = run(capsys, ["paths", "Z", "Bogus", "--graph", fig2_graph])
        assert code == 1
        assert "error:" in err


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


class TestSimulate:
    def test_writes_the_four_files(self, capsys, tmp_path):
        prefix = tmp_path / "run"
        code, out, _ = run(
            capsys, ["simulate", "fig2", "--n", "400", "--seed", "3", "--out", str(prefix)]
        )
        assert code == 0
        assert "scenario fig2: n=400, seed=3" in out
        assert "true risk difference" in out
        for suffix in (".csv", ".oracle.csv", ".manifest.json", ".config.toml"):
            assert (tmp_path / f"run{suffix}").exists()
        oracle = read_oracle(tmp_path / "run.oracle.csv")
        assert oracle["n"] == 400.0

    def test_json_payload(self, capsys, tmp_path):
        prefix = tmp_path / "run"
        code, out, _ = run(
            capsys,
            ["simulate", "null", "--n", "300", "--seed", "1", "--out", str(prefix),
             "--format", "json"],
        )
        assert code == 0
        payload = json.loads(out)
        assert payload["scenario"] == "null" and payload["n"] == 300
        assert sum(p["rows"] for p in payload["patterns"]) == 300
        assert set(payload["files"]) == {"data", "oracle", "config", "manifest"}

    def test_outputs_are_byte_identical_across_directories(self, capsys, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        a.mkdir(), b.mkdir()
        for d in (a, b):
            run(capsys, ["simulate", "fig2", "--n", "350", "--seed", "9",
                         "--out", str(d / "run")])
        for suffix in (".csv", ".oracle.csv", ".config.toml", ".manifest.json"):
            assert (a / f"run{suffix}").read_bytes() == (b / f"run{suffix}").read_bytes()

    def test_scenario_file_input(self, capsys, tmp_path):
        (tmp_path / "g.dag").write_text(FIG2_DAG, encoding="utf-8")
        spath = tmp_path / "custom.toml"
        spath.write_text(SCENARIO_TOML, encoding="utf-8")
        code, out, _ = run(
            capsys,
            ["simulate", str(spath), "--n", "200", "--out", str(tmp_path / "run"),
             "--format", "json"],
        )
        assert code == 0
        payload = json.loads(out)
        assert payload["scenario"] == "filed"
        assert "scenario" in payload["manifest"]["inputs"]

    def test_unknown_scenario(self, capsys, tmp_path):
        code, _, err = run(
            capsys, ["simulate", "mystery", "--out", str(tmp_path / "run")]
        )
        assert code == 1
        assert "unknown scenario 'mystery'" in err


# ---------------------------------------------------------------------------
# estimate, and the simulate -> estimate pipeline
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """One simulated fig2 run shared by the estimate tests."""
    root = tmp_path_factory.mktemp("pipeline")
    prefix = root / "run"
    code = main(["simulate", "fig2", "--n", "2500", "--seed", "11",
                 "--out", str(prefix)])
    assert code == 0
    return {
        "data": str(root / "run.csv"),
        "config": str(root / "run.config.toml"),
        "truth": read_oracle(root / "run.oracle.csv")["true_ate"],
    }


class TestEstimate:
    def test_pipeline_recovers_the_oracle_truth(self, capsys, pipeline):
        code, out, _ = run(
            capsys,
            ["estimate", "--data", pipeline["data"], "--config", pipeline["config"],
             "--format", "json"],
        )
        assert code == 0
        payload = json.loads(out)
        result = payload["result"]
        assert result["method"] == "mpa"
        assert result["n_used"] == 2500
        assert abs(result["estimate"] - pipeline["truth"]) < 0.1
        assert payload["manifest"]["params"]["method"] == "mpa"
        assert result["propensity"]["patterns"]

    def test_text_report(self, capsys, pipeline):
        code, out, _ = run(
            capsys, ["estimate", "--data", pipeline["data"], "--config", pipeline["config"]]
        )
        assert code == 0
        assert "risk-difference estimate (method: mpa)" in out
        assert "per 1000 patients" in out
        assert "covariate balance (standardized differences, %)" in out
        assert "propensity models (mpa)" in out
        assert "run manifest" in out

    def test_method_override(self, capsys, pipeline):
        code, out, _ = run(
            capsys,
            ["estimate", "--data", pipeline["data"], "--config", pipeline["config"],
             "--method", "mind"],
        )
        assert code == 0
        assert "(method: missing_indicator)" in out

        code, out, _ = run(
            capsys,
            ["estimate", "--data", pipeline["data"], "--config", pipeline["config"],
             "--method", "crude", "--format", "json"],
        )
        assert code == 0
        result = json.loads(out)["result"]
        assert result["method"] == "crude"
        assert result["propensity"] is None and result["balance_after"] is None

    def test_bootstrap_flags_and_determinism(self, capsys, pipeline, tmp_path):
        copy = tmp_path / "est.txt"
        argv = ["estimate", "--data", pipeline["data"], "--config", pipeline["config"],
                "--bootstrap", "40", "--seed", "5", "--out", str(copy)]
        code, first, _ = run(capsys, argv)
        assert code == 0
        assert "bootstrap" in first and "B=40, failed=0" in first
        assert "bootstrap SE" in first and "95% CI" in first
        assert copy.read_text(encoding="utf-8") == first
        _, second, _ = run(capsys, argv)
        assert second == first

    def test_bootstrap_json_matches_text_numbers(self, capsys, pipeline):
        base = ["estimate", "--data", pipeline["data"], "--config", pipeline["config"],
                "--bootstrap", "40", "--seed", "5"]
        _, text_out, _ = run(capsys, base)
        _, json_out, _ = run(capsys, base + ["--format", "json"])
        result = json.loads(json_out)["result"]
        assert result["bootstrap"] == {"requested": 40, "failed": 0}
        assert f"{result['estimate']:.4f}" in text_out
        assert f"{result['se']:.4f}" in text_out

    def test_guard_rails_exit_one(self, capsys, pipeline, tmp_path):
        strict = tmp_path / "strict.toml"
        with open(pipeline["config"], encoding="utf-8") as fh:
            strict.write_text(
                fh.read() + "\n[model]\nmin_pattern_size = 100000\n", encoding="utf-8"
            )
        code, _, err = run(
            capsys, ["estimate", "--data", pipeline["data"], "--config", str(strict)]
        )
        assert code == 1
        assert "error: pattern" in err and "min_pattern_size" in err

    def test_unknown_method_flag(self, capsys, pipeline):
        code, _, err = run(
            capsys,
            ["estimate", "--data", pipeline["data"], "--config", pipeline["config"],
             "--method", "ipw"],
        )
        assert code == 1
        assert "unknown method 'ipw'" in err

    def test_missing_data_file(self, capsys, pipeline, tmp_path):
        code, _, err = run(
            capsys,
            ["estimate", "--data", str(tmp_path / "no.csv"), "--config", pipeline["config"]],
        )
        assert code == 1
        assert "file not found" in err


# ---------------------------------------------------------------------------
# usage errors
# ---------------------------------------------------------------------------


class TestUsage:
    @pytest.mark.parametrize(
        "argv",
        [
            [],
            ["estimate", "--data", "d.csv"],
            ["check"],
            ["simulate", "fig2"],
            ["check", "--graph", "g.dag", "--format", "yaml"],
            ["frobnicate"],
        ],
    )
    def test_usage_errors_exit_one(self, capsys, argv):
        with pytest.raises(SystemExit) as exc:
            main(argv)
        assert exc.value.code == 1
        assert "error:" in capsys.readouterr().err
