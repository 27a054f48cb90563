import json

import pytest
from click.testing import CliRunner

from src.teamlog.cli import EXIT_BUDGET, EXIT_ERROR, EXIT_FALSE, EXIT_OK, cli, run
from src.teamlog.model_files import save_system
from src.teamlog.suite_runner import EXAMPLE_GAMMA, INCOMPLETE_SYSTEM

TWO = {"domain": 2, "relations": {"P": [[0]], "R": [[0, 1], [1, 1]]}}
THREE = {"domain": 3, "relations": {"P": [[0], [2]], "R": [[0, 1], [1, 2], [2, 0]]}}


@pytest.fixture
def files(tmp_path):
    def write(name, data):
        path = tmp_path / name
        path.write_text(data if isinstance(data, str) else json.dumps(data), encoding="utf-8")
        return str(path)

    return write


@pytest.fixture
def invoke(capsys):
    def call(*args):
        code = run(list(args))
        out = capsys.readouterr().out
        return code, json.loads(out) if out.strip() else None

    return call


@pytest.fixture
def two(files):
    return files("two.json", TWO)


@pytest.fixture
def x0(files):
    return files("x0.json", {"vars": ["x"], "rows": [[0]]})


@pytest.fixture
def x01(files):
    return files("x01.json", {"vars": ["x"], "rows": [[0], [1]]})


@pytest.fixture
def gamma_file(files):
    return files("gamma.txt", "\n".join(EXAMPLE_GAMMA) + "\n")


def test_eval_exit_codes(invoke, two, x0, x01):
    code, data = invoke("eval", "-m", two, "-t", x0, "-f", "P(x)")
    assert code == EXIT_OK
    assert data["satisfied"] is True
    assert data["fragment"]["first_order"] is True
    code, data = invoke("eval", "-m", two, "-t", x01, "-f", "P(x)")
    assert code == EXIT_FALSE
    assert data["satisfied"] is False


def test_eval_certificate(invoke, two, x01):
    code, data = invoke("eval", "-m", two, "-t", x01, "-f", "dep( ; x) v P(x)", "--certificate")
    assert code == EXIT_OK
    assert data["certificate"] is not None
    assert data["certificate_verified"] is True


def test_strict_flag_changes_the_reading(invoke, two, x0):
    formula = "E y (inc(x ; y) & ~ y = x)"
    assert invoke("eval", "-m", two, "-t", x0, "-f", formula)[0] == EXIT_OK
    assert invoke("--strict", "eval", "-m", two, "-t", x0, "-f", formula)[0] == EXIT_FALSE


def test_input_errors_are_reported_as_json(invoke, two, x0, tmp_path):
    code, data = invoke("eval", "-m", two, "-t", x0, "-f", "P(x) &")
    assert code == EXIT_ERROR
    assert data["error"]["kind"] == "syntax"
    code, data = invoke("eval", "-m", two, "-t", x0, "-f", "Q(x)")
    assert code == EXIT_ERROR
    assert data["error"]["kind"] == "signature"
    code, data = invoke("eval", "-m", str(tmp_path / "absent.json"), "-t", x0, "-f", "P(x)")
    assert code == EXIT_ERROR
    assert data["error"]["kind"] == "usage"


def test_budget_exit_code(invoke, files, monkeypatch):
    monkeypatch.setenv("TEAMLOG_MAX_SPLIT_ROWS", "2")
    model = files("three.json", THREE)
    team = files("x012.json", {"vars": ["x"], "rows": [[0], [1], [2]]})
    code, data = invoke("--profile", "quick", "eval", "-m", model, "-t", team, "-f", "(~ x != x) v (~ x != x)")
    assert code == EXIT_BUDGET
    assert data["error"]["kind"] == "budget"


def test_sat(invoke):
    code, data = invoke("sat", "-f", EXAMPLE_GAMMA[0], "-f", EXAMPLE_GAMMA[1], "--max-n", "3")
    assert code == EXIT_OK
    assert data["structure"]["domain"] == 2
    assert data["team"] == {"vars": ["x"], "rows": [[0], [1]]}
    code, data = invoke("sat", "-f", EXAMPLE_GAMMA[0], "-f", EXAMPLE_GAMMA[1], "-f", "dep( ; x)", "--max-n", "3")
    assert code == EXIT_FALSE
    assert data["satisfiable"] is False


def test_sat_reads_formula_files_and_needs_formulas(invoke, gamma_file):
    assert invoke("sat", "--formula-file", gamma_file, "--max-n", "2")[0] == EXIT_OK
    code, data = invoke("sat")
    assert code == EXIT_ERROR
    assert data["error"]["kind"] == "usage"


def test_props(invoke, two):
    code, data = invoke("props", "-m", two, "-f", "inc(x ; y)", "--check", "downward,union")
    assert code == EXIT_FALSE
    assert [v["holds"] for v in data["verdicts"]] == [False, True]
    code, data = invoke("props", "-m", two, "-f", "dep(x ; y)", "--check", "downward", "--check", "empty")
    assert code == EXIT_OK
    assert data["vars"] == ["x", "y"]


def test_props_locality_with_extra_variables(invoke, two):
    code, _ = invoke("props", "-m", two, "-f", "dep( ; x) v P(x)", "--vars", "u,x", "--check", "locality")
    assert code == EXIT_OK


def test_translate(invoke):
    code, data = invoke("translate", "-f", "dep(x ; y)")
    assert code == EXIT_OK
    assert data["los_guarantee"] == "strong"
    assert data["sentence"]
    code, data = invoke("translate", "-f", "~ P(x)")
    assert code == EXIT_ERROR
    assert data["error"]["kind"] == "unsupported"


def test_crosscheck(invoke, two, files):
    team = files("xy.json", {"vars": ["x", "y"], "rows": [[0, 0], [0, 1], [1, 1]]})
    code, data = invoke("crosscheck", "-m", two, "-t", team, "-f", "E z (inc(x ; z) & R(y, z))")
    assert code == EXIT_OK
    assert data["agrees"] is True


@pytest.fixture
def family(files):
    return files(
        "family.json",
        {
            "structures": [TWO, THREE],
            "teams": [{"vars": ["x"], "rows": [[0]]}, {"vars": ["x"], "rows": [[1], [2]]}],
            "others": [{"vars": ["x"], "rows": [[1]]}, {"vars": ["x"], "rows": [[0]]}],
        },
    )


def test_ultraproduct_commands(invoke, family):
    code, data = invoke("up", "product", "--family", family, "-j", "1")
    assert code == EXIT_OK
    assert data["structure"]["domain"] == 3
    assert data["isomorphism"]["holds"] is True
    code, data = invoke("up", "check-lemma", "--family", family, "--fip", "0,1;1", "--kind", "union")
    assert code == EXIT_OK
    assert data["holds"] is True
    code, data = invoke("up", "check-los", "--family", family, "-j", "0", "-f", "dep( ; x) v P(x)")
    assert code == EXIT_OK
    assert data["agrees"] is True


def test_fip_without_common_point(invoke, family):
    code, data = invoke("up", "product", "--family", family, "--fip", "0;1")
    assert code == EXIT_ERROR
    assert data["error"]["kind"] == "non-principal"


def test_delta_prints_the_sentences(invoke, gamma_file):
    code, data = invoke("delta", "-f", gamma_file)
    assert code == EXIT_OK
    assert [s["schema"] for s in data["sentences"]].count(1) == 2


def test_delta_expand_then_check(invoke, gamma_file, two, x01, tmp_path):
    output = str(tmp_path / "expanded.json")
    code, data = invoke("delta", "-f", gamma_file, "expand", "-m", two, "-t", x01, "-o", output)
    assert code == EXIT_OK
    assert data["relations"]["S_0"] == [[0], [1]]
    code, data = invoke("delta", "-f", gamma_file, "check", "-m", output)
    assert code == EXIT_OK
    assert data["consistent"] is True


def test_delta_subcommands_need_gamma(invoke, two):
    code, data = invoke("delta", "check", "-m", two)
    assert code == EXIT_ERROR
    assert data["error"]["kind"] == "precondition"


def test_delta_merge_and_ground(invoke, gamma_file, two, x01, tmp_path):
    system = str(tmp_path / "system.json")
    save_system(INCOMPLETE_SYSTEM, system)
    code, data = invoke("delta", "merge", "-s", system)
    assert code == EXIT_FALSE
    assert data["verified"] is False
    code, data = invoke("delta", "-f", gamma_file, "ground", "-m", two, "-t", x01)
    assert code == EXIT_FALSE
    assert data["constants"] == {"c_x": 0}


def test_suite_command(invoke):
    code, data = invoke("--profile", "quick", "suite", "--name", "example", "--seed", "3")
    assert code == EXIT_OK
    assert data["passed"] is True
    assert data["reports"][0]["seed"] == 3


def test_click_entry_point(two, x0):
    runner = CliRunner()
    result = runner.invoke(cli, ["--help"])
    assert result.exit_code == 0
    assert "delta" in result.output
    result = runner.invoke(cli, ["eval", "-m", two, "-t", x0, "-f", "dep( ; x)"])
    assert result.exit_code == EXIT_OK
    assert json.loads(result.output)["satisfied"] is True


def test_props_check_list(invoke, two):
    code, data = invoke("props", "-m", two, "-f", "P(x)", "--check", "flatness,locality")
    assert code == EXIT_OK
    assert [v["property"] for v in data["verdicts"]] == ["flatness", "locality"]
    code, data = invoke("props", "-m", two, "-f", "P(x)", "--check", "flatness,sideways")
    assert code == EXIT_ERROR
    assert data["error"]["kind"] == "usage"


def test_labelled_structure_with_index_team(invoke, files):
    model = files(
        "labelled.json",
        {
            "domain": ["a", "b"],
            "relations": {"P": [["a"]], "R": [["a", "b"]]},
            "functions": {"f": {"(a)": "b", "(b)": "a"}},
            "constants": {"c": "a"},
        },
    )
    team = files("xy.json", {"vars": ["x", "y"], "rows": [[0, 1], [1, 1]]})
    code, data = invoke("eval", "-m", model, "-t", team, "-f", "dep(x ; y)")
    assert code == EXIT_OK
    assert data["satisfied"] is True


def test_numeric_labels_do_not_shift_team_rows(invoke, files):
    model = files("numeric.json", {"domain": [1, 2], "relations": {"P": [[2]]}})
    team = files("x1.json", {"vars": ["x"], "rows": [[1]]})
    code, data = invoke("eval", "-m", model, "-t", team, "-f", "P(x)")
    assert code == EXIT_OK
    assert data["satisfied"] is True


@pytest.fixture
def indexed(files):
    structures = [files("a.json", TWO), files("b.json", THREE), files("c.json", TWO)]
    teams = [
        files("xa.json", {"vars": ["x"], "rows": [[0]]}),
        files("xb.json", {"vars": ["x"], "rows": [[1], [2]]}),
        files("xc.json", {"vars": ["x"], "rows": [[1]]}),
    ]
    others = [
        files("ya.json", {"vars": ["x"], "rows": [[1]]}),
        files("yb.json", {"vars": ["x"], "rows": [[0]]}),
        files("yc.json", {"vars": ["x"], "rows": [[0]]}),
    ]
    return structures, teams, others


def test_up_with_indices_and_principal(invoke, indexed):
    structures, teams, _ = indexed
    code, data = invoke("up", "--indices", "3", "--principal", "1", "--structures", *structures, "--teams", *teams)
    assert code == EXIT_OK
    assert data["structure"]["domain"] == 3
    assert len(data["team"]["rows"]) == 2
    assert data["isomorphism"]["holds"] is True
    code, data = invoke("up", "product", "--indices", "3", "--principal", "1", "--structures", *structures)
    assert code == EXIT_OK
    assert data["team"] is None


def test_up_indices_must_match_the_structures(invoke, indexed):
    structures, _, _ = indexed
    code, data = invoke("up", "product", "--indices", "2", "--principal", "1", "--structures", *structures)
    assert code == EXIT_ERROR
    assert data["error"]["kind"] == "usage"
    code, data = invoke("up", "product", "--indices", "3")
    assert code == EXIT_ERROR


def test_up_check_lemma_with_separate_files(invoke, indexed):
    structures, teams, others = indexed
    code, data = invoke(
        "up", "check-lemma", "--kind", "union", "--principal", "2",
        "--structures", *structures, "--teams", *teams, "--others", *others,
    )
    assert code == EXIT_OK
    assert data["holds"] is True


def test_up_options_before_the_subcommand(invoke, indexed):
    structures, teams, _ = indexed
    code, data = invoke("up", "--structures", *structures, "--teams", *teams, "check-los", "-j", "1", "-f", "dep( ; x) v P(x)")
    assert code == EXIT_OK
    assert data["agrees"] is True
