import json

import pytest

from src.teamlog.compactness import merge_teams
from src.teamlog.core_model import Team
from src.teamlog.errors import FileFormatError
from src.teamlog.formula_parser import parse
from src.teamlog.model_files import (
    corpus_formulas,
    dump_json,
    family_from_files,
    load_corpus,
    load_family,
    load_formulas,
    load_structure,
    load_supplement,
    load_system,
    load_team,
    read_formula_lines,
    save_structure,
    save_system,
    save_team,
    structure_from_dict,
    structure_to_dict,
    team_from_dict,
)
from src.teamlog.suite_runner import INCOMPLETE_SYSTEM

LABELLED = {
    "domain": ["a", "b", "c"],
    "relations": {"P": [["b"]], "R": [["a", "a"], ["b", "c"]], "Q": False},
    "functions": {"f": {"(a)": "b", "(b)": "c", "(c)": "a"}},
    "constants": {"c0": "a"},
    "signature": {"relations": {"Q": 0}},
}


def write(tmp_path, name, data):
    path = tmp_path / name
    path.write_text(json.dumps(data) if not isinstance(data, str) else data, encoding="utf-8")
    return str(path)


def test_labelled_structure_file(lab_structure):
    structure = structure_from_dict(LABELLED)
    assert structure.size == 3
    assert structure.relations["R"] == lab_structure.relations["R"]
    assert structure.functions["f"] == lab_structure.functions["f"]
    assert structure.functions["c0"][()] == 0
    assert structure.signature.relation_arity("Q") == 0


def test_structure_survives_save_and_load(tmp_path, lab_structure):
    path = str(tmp_path / "lab.json")
    save_structure(lab_structure, path)
    assert load_structure(path) == lab_structure
    assert structure_to_dict(load_structure(path))["domain"] == 3


@pytest.mark.parametrize(
    "data, message",
    [
        ({"domain": 0}, "domain"),
        ({"domain": ["a", "a"]}, "distinct"),
        ({"domain": 2, "relations": {"R": [[0, 2]]}}, "not a domain element"),
        ({"domain": 2, "relations": {"R": []}}, "arity"),
        ({"domain": 2, "colour": "red"}, "colour"),
    ],
)
def test_bad_structure_files(data, message):
    with pytest.raises(FileFormatError) as info:
        structure_from_dict(data)
    assert message in info.value.detail


def test_team_rows_may_use_labels():
    team = team_from_dict({"vars": ["y", "x"], "rows": [["b", "a"]]}, domain=["a", "b"])
    assert team == Team(("x", "y"), ((0, 1),))


def test_team_files_are_checked(two_element):
    with pytest.raises(FileFormatError):
        team_from_dict({"vars": ["x"], "rows": [[0, 1]]})
    with pytest.raises(FileFormatError):
        team_from_dict({"vars": ["x", "x"], "rows": []})
    with pytest.raises(FileFormatError):
        team_from_dict({"vars": ["x"], "rows": [[5]]}, two_element)


def test_team_survives_save_and_load(tmp_path, xy_team, two_element):
    path = str(tmp_path / "team.json")
    save_team(xy_team, path)
    assert load_team(path, two_element) == xy_team


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(FileFormatError):
        load_structure(str(tmp_path / "absent.json"))
    with pytest.raises(FileFormatError) as info:
        load_structure(write(tmp_path, "broken.json", "{ nope"))
    assert "malformed JSON" in info.value.detail


def test_coherence_system_file(tmp_path):
    path = str(tmp_path / "system.json")
    save_system(INCOMPLETE_SYSTEM, path)
    loaded = load_system(path)
    assert loaded == INCOMPLETE_SYSTEM
    assert not merge_teams(loaded).verified
    with pytest.raises(FileFormatError):
        load_system(write(tmp_path, "bad.json", {"vars": ["x"], "size": 2, "tables": {"a": []}}))


def test_supplement_file(tmp_path, xy_team):
    data = {"vars": ["y", "x"], "images": [{"row": row[::-1], "values": [0]} for row in map(list, xy_team.rows)]}
    function = load_supplement(write(tmp_path, "supp.json", data), xy_team)
    assert all(function.images(row) == frozenset({0}) for row in xy_team.rows)
    with pytest.raises(FileFormatError):
        load_supplement(write(tmp_path, "other.json", {"vars": ["x"], "images": []}), xy_team)


def test_family_file(tmp_path):
    data = {
        "structures": [{"domain": 2, "relations": {"P": [[0]]}}, {"domain": 3, "relations": {"P": [[2]]}}],
        "teams": [{"vars": ["x"], "rows": [[0]]}, {"vars": ["x"], "rows": [[1], [2]]}],
        "elements": [1, 2],
    }
    family = load_family(write(tmp_path, "family.json", data))
    assert [s.size for s in family.structures] == [2, 3]
    assert family.elements == (1, 2)
    assert family.others is None
    data["elements"] = [1]
    with pytest.raises(FileFormatError):
        load_family(write(tmp_path, "short.json", data))


def test_formula_files_skip_comments_and_blanks(tmp_path):
    text = "# compactness example\nA y (inc(y ; x))\n\nE y E z (y != z)  # two elements\n"
    assert read_formula_lines(text) == ["A y (inc(y ; x))", "E y E z (y != z)"]
    assert load_formulas(write(tmp_path, "gamma.txt", text)) == read_formula_lines(text)


def test_corpus_parses():
    corpus = load_corpus()
    assert {"first_order", "downward", "union", "lax", "strict", "full"} <= set(corpus)
    for text in corpus_formulas():
        parse(text)
    with pytest.raises(ValueError):
        load_corpus(["nonexistent"])


def test_dump_json_keeps_unicode():
    assert "∅" in dump_json({"team": "∅"})


README_STRUCTURE = {
    "domain": ["a", "b"],
    "relations": {"P": [["a"]], "R": [["a", "b"]]},
    "functions": {"f": {"(a)": "b", "(b)": "a"}},
    "constants": {"c": "a"},
}


def test_team_rows_are_indices_over_labelled_domains():
    team = team_from_dict({"vars": ["x", "y"], "rows": [[0, 1], [1, 1]]}, domain=README_STRUCTURE["domain"])
    assert team == Team(("x", "y"), ((0, 1), (1, 1)))


def test_integer_rows_never_go_through_labels():
    # element 2 sits at index 1
    team = team_from_dict({"vars": ["x"], "rows": [[1]]}, domain=[1, 2])
    assert team.rows == ((1,),)
    with pytest.raises(FileFormatError) as info:
        team_from_dict({"vars": ["x"], "rows": [[2]]}, domain=[1, 2])
    assert "outside 0..1" in info.value.detail


@pytest.mark.parametrize(
    "rows, message",
    [
        ([[0], [-1]], "row 1, column x: index -1"),
        ([["a"]], "row 0, column x: 'a' is not an element index"),
    ],
)
def test_team_values_are_checked_without_a_structure(rows, message):
    with pytest.raises(FileFormatError) as info:
        team_from_dict({"vars": ["x"], "rows": rows})
    assert message in info.value.detail


def test_family_from_separate_files(tmp_path):
    structures = [
        write(tmp_path, "m0.json", {"domain": 2, "relations": {"P": [[0]]}}),
        write(tmp_path, "m1.json", {"domain": ["u", "v", "w"], "relations": {"P": [["w"]]}}),
    ]
    teams = [
        write(tmp_path, "x0.json", {"vars": ["x"], "rows": [[0]]}),
        write(tmp_path, "x1.json", {"vars": ["x"], "rows": [[1], ["w"]]}),
    ]
    family = family_from_files(structures, teams, elements=[1, "v"])
    assert [s.size for s in family.structures] == [2, 3]
    assert family.teams[1].rows == ((1,), (2,))
    assert family.elements == (1, 1)
    with pytest.raises(FileFormatError):
        family_from_files(structures, teams[:1])
    with pytest.raises(FileFormatError):
        family_from_files(structures, teams, elements=[2, 0])
