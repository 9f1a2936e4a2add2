import json

import pytest
from click.testing import CliRunner

from src.main import cli

from .conftest import fixture_path

BITS = fixture_path("bits.demo.json")
GRAPHS = fixture_path("graphs.demo.json")


@pytest.fixture(autouse=True)
def isolated_settings(tmp_path, monkeypatch):
    monkeypatch.setenv("HOME", str(tmp_path))
    monkeypatch.delenv("TOPOSLOS_MAX_ENUM", raising=False)


@pytest.fixture
def runner():
    return CliRunner()


def run(runner, *args):
    result = runner.invoke(cli, list(args))
    return result, (json.loads(result.stdout) if result.stdout.strip().startswith("{") else None)


def test_check_reports_the_summary(runner):
    result, report = run(runner, "check", BITS)
    assert result.exit_code == 0
    assert report["status"] == "ok"
    assert report["summary"]["models"]["b0"] == {"s": 2}
    assert report["generators"]["singletons_b0"]["ok"] is True


def test_check_human_format(runner):
    result = runner.invoke(cli, ["--format", "human", "check", GRAPHS])
    assert result.exit_code == 0
    assert result.stdout.startswith("check: ok")


def test_remembered_workspace(runner):
    result, _ = run(runner, "check", BITS, "--remember")
    assert result.exit_code == 0
    result, report = run(runner, "eval", "-m", "b0", "-f", "rx")
    assert result.exit_code == 0
    assert report["value"] == {"*": [[0]]}


def test_eval(runner):
    result, report = run(runner, "-w", BITS, "eval", "-m", "b0", "-f", "rx")
    assert result.exit_code == 0
    assert report["value"] == {"*": [[0]]}
    assert report["size"] == 1 and report["ambient_size"] == 2
    assert report["valid"] is False
    result, report = run(runner, "-w", BITS, "eval", "-m", "b0", "-f", "exists x:s. r(x)")
    assert report["valid"] is True


def test_eval_over_a_graph(runner):
    result, report = run(runner, "-w", GRAPHS, "eval", "-m", "edge", "-f", "ex_r")
    assert result.exit_code == 0
    assert report["value"] == {"V": [[]], "E": []}


def test_eval_modal_formula(runner):
    result, report = run(runner, "-w", BITS, "eval", "-m", "fork", "-f", "box_p")
    assert result.exit_code == 0
    assert report["value"] == {"*": [1]}


def test_syntax_errors_exit_with_two(runner):
    result, report = run(runner, "-w", BITS, "eval", "-m", "b0", "-f", "[x:s] r(x")
    assert result.exit_code == 2
    assert report["status"] == "error"
    assert report["error"]["code"] == "parse-error"
    assert report["error"]["location"].startswith("<command line>:1:")


def test_unknown_model(runner):
    result, report = run(runner, "-w", BITS, "eval", "-m", "b9", "-f", "rx")
    assert result.exit_code == 2
    assert report["error"]["code"] == "unknown-identifier"


def test_missing_workspace(runner):
    result, report = run(runner, "eval", "-m", "b0", "-f", "rx")
    assert result.exit_code == 2
    assert report["error"]["code"] == "malformed-input"


def test_product_classes(runner):
    result, report = run(runner, "-w", BITS, "product", "-M", "b0,b1,b2", "--filter", "mid")
    assert result.exit_code == 0
    assert report["class_counts"] == {"s": {"*": 4}}
    assert report["relations"]["r"] == {"*": [[[0, 1, 0]]]}
    assert report["independence"]["ok"] is True
    assert sum(len(c["members"]) for c in report["classes"]["s"]["*"]) == 8


def test_product_needs_one_model_per_index(runner):
    result, _ = run(runner, "-w", BITS, "product", "-M", "b0,b1", "--filter", "mid")
    assert result.exit_code == 2


def test_conditions(runner):
    result, report = run(runner, "-w", BITS, "conditions", "--instance", "exists-at-1",
                         "--only", "filterable", "--only", "dual")
    assert result.exit_code == 0
    assert report["status"] == "pass"
    assert [c["condition"] for c in report["report"]["children"]] == ["filterable-all", "dual-all"]


def test_los_passes_at_an_ultrafilter(runner):
    result, report = run(runner, "-w", BITS, "los", "--instance", "ultra-at-1", "--steps")
    assert result.exit_code == 0
    assert report["status"] == "pass"
    assert report["report"]["verdict"] == "pass"
    assert report["steps"]["condition"] == "proof-steps"
    assert "sentence" not in report


def test_los_sentence(runner):
    result, report = run(runner, "-w", BITS, "los", "--instance", "sentence-at-2")
    assert result.exit_code == 0
    assert report["sentence"]["verdict"] == "pass"


def test_los_on_graphs(runner):
    result, report = run(runner, "-w", GRAPHS, "los", "--instance", "edge-at-1")
    assert result.exit_code == 0
    assert report["report"]["verdict"] == "pass"


def test_los_refuses_non_ultrafilters(runner):
    result, report = run(runner, "-w", BITS, "los", "--instance", "mid-rx")
    assert result.exit_code == 1
    assert report["error"]["code"] == "hypotheses-not-met"


def test_enumeration_bound_exit_code(runner):
    result, report = run(runner, "--max-enum", "3", "check", BITS)
    assert result.exit_code == 3
    assert report["error"]["code"] == "search-space-too-large"


@pytest.mark.parametrize("args", [
    ["oracle", "subobjects", "-m", "b0", "-c", "[x:s, y:s]"],
    ["oracle", "quantifiers", "-m", "b0", "-c", "[x:s, y:s]", "--keep", "1"],
    ["oracle", "modal", "-m", "fork"],
    ["oracle", "classes", "-M", "b0,b1,b2", "--filter", "gen"],
    ["oracle", "epi", "--morphism", "flip"],
])
def test_oracles_agree(runner, args):
    result, report = run(runner, "-w", BITS, *args)
    assert result.exit_code == 0
    assert report["status"] == "ok"
    assert report["mismatches"] == []
    assert report["checked"] > 0


def test_subobject_count_oracle(runner):
    _, report = run(runner, "-w", GRAPHS, "oracle", "subobjects", "-m", "edge", "-c", "[x:s]")
    assert report["count"] == {"direct": 5, "oracle": 5}


def test_modal_oracle_needs_a_coalgebra(runner):
    result, _ = run(runner, "-w", BITS, "oracle", "modal", "-m", "b0")
    assert result.exit_code == 2


@pytest.mark.parametrize("workspace, args", [
    (BITS, ["check"]),
    (GRAPHS, ["check"]),
    (BITS, ["eval", "-m", "b0", "-f", "ex_r"]),
    (BITS, ["eval", "-m", "fork", "-f", "box_p"]),
    (GRAPHS, ["eval", "-m", "edge", "-f", "not_r"]),
    (BITS, ["product", "-M", "b0,b1,b2", "--filter", "mid"]),
    (BITS, ["conditions", "--instance", "exists-at-1"]),
    (BITS, ["los", "--instance", "exists-at-1", "--steps"]),
    (BITS, ["los", "--instance", "sentence-at-2"]),
    (GRAPHS, ["los", "--instance", "exists-at-2", "--steps"]),
    (BITS, ["los", "--instance", "mid-rx"]),
    (BITS, ["oracle", "subobjects", "-m", "b0", "-c", "[x:s, y:s]"]),
    (BITS, ["oracle", "quantifiers", "-m", "b0", "-c", "[x:s, y:s]", "--keep", "1"]),
    (BITS, ["oracle", "modal", "-m", "fork"]),
    (BITS, ["oracle", "classes", "-M", "b0,b1,b2", "--filter", "gen"]),
    (BITS, ["oracle", "epi", "--morphism", "flip"]),
    (GRAPHS, ["oracle", "subobjects", "-m", "edge", "-c", "[x:s]"]),
])
def test_reports_are_deterministic(runner, workspace, args):
    first = runner.invoke(cli, ["-w", workspace, *args])
    second = runner.invoke(cli, ["-w", workspace, *args])
    assert first.exit_code == second.exit_code
    assert first.stdout
    assert first.stdout == second.stdout
