import json
from fractions import Fraction as F

import pytest

from randomhorizon import cli
from randomhorizon.errors import InvalidScenario
from randomhorizon.io import (
    dump_json,
    format_fraction,
    load_builtin,
    parse_fraction,
    parse_scenario,
    serialize_scenario,
)


def _ex1_doc():
    return json.loads(
        dump_json(serialize_scenario(load_builtin("ex1")))
    )


def test_fraction_round_trip():
    assert format_fraction(F(-1)) == "-1"
    assert format_fraction(F(3, 4)) == "3/4"
    assert parse_fraction("3") == F(3)
    assert parse_fraction("3/1") == F(3)
    assert parse_fraction(-2) == F(-2)
    with pytest.raises(InvalidScenario):
        parse_fraction("x/y")


def test_scenario_round_trip():
    sc = load_builtin("ex1")
    doc = serialize_scenario(sc)
    again = parse_scenario(doc)
    assert serialize_scenario(again) == doc
    assert again.space == sc.space
    assert again.tau.values == sc.tau.values
    assert again.price.values == sc.price.values


@pytest.mark.parametrize(
    "mutate, code",
    [
        (lambda d: d.pop("tau"), "schema"),
        (lambda d: d["probs"].__setitem__(0, "1/3"), "probabilities"),
        (lambda d: d["filtration"].__setitem__(2, [["a", "c"], ["b", "d"]]), "filtration"),
        (lambda d: d["S"]["values"]["a"].__setitem__(1, ["7"]), "adaptedness"),
        (lambda d: d["tau"].__setitem__("a", "soon"), "schema"),
        (lambda d: d["S"]["values"]["a"].__setitem__(0, ["1", "2"]), "schema"),
    ],
)
def test_scenario_error_codes(mutate, code):
    doc = _ex1_doc()
    mutate(doc)
    with pytest.raises(InvalidScenario) as err:
        parse_scenario(doc)
    assert err.value.code == code
    assert err.value.location


def _run(argv, capsys):
    rc = cli.main(argv)
    out = capsys.readouterr()
    return rc, out.out, out.err


def _scenario_path(name):
    from importlib import resources

    return str(resources.files("randomhorizon.scenarios").joinpath(f"{name}.json"))


def test_cli_certify_ex1(capsys):
    rc, out, _ = _run(["certify", _scenario_path("ex1")], capsys)
    assert rc == 0
    doc = json.loads(out)
    assert doc["nupbr_F"] is True
    assert doc["nupbr_G_stopped"] is False
    assert doc["arbitrage_node"] == {"time": 2, "block": ["b"], "theta": ["-1"]}


def test_cli_certify_ex2(capsys):
    rc, out, _ = _run(["certify", _scenario_path("ex2")], capsys)
    assert rc == 0
    doc = json.loads(out)
    assert doc["nupbr_F"] is True and doc["nupbr_G_stopped"] is True
    assert "arbitrage_node" not in doc


def test_cli_inspect(capsys, tmp_path):
    out_dir = tmp_path / "reports"
    rc, out, _ = _run(
        ["inspect", _scenario_path("ex1"), "--out", str(out_dir)], capsys
    )
    assert rc == 0
    doc = json.loads(out)
    assert doc["Z"]["a"] == ["1", "1/2", "0"]
    assert doc["thin_set"] == [["a", 2], ["c", 2]]
    assert (out_dir / "inspect.json").exists()
    assert (out_dir / "inspect_table.csv").exists()


def test_cli_theorems(capsys):
    for name in ("ex1", "ex2"):
        rc, out, _ = _run(["theorems", _scenario_path(name), "--battery", "20"], capsys)
        assert rc == 0
        doc = json.loads(out)
        assert doc["consistent"] is True


def test_cli_witness(capsys):
    rc, out, _ = _run(["witness", _scenario_path("ex1")], capsys)
    assert rc == 0
    doc = json.loads(out)
    assert doc["thin_set_empty"] is False
    assert doc["witness"]["time"] == 2
    assert doc["witness"]["stopped_satisfies_nupbr"] is False
    rc, out, _ = _run(["witness", _scenario_path("ex2")], capsys)
    assert rc == 0
    assert json.loads(out) == {"thin_set_empty": True, "witness": None}


def test_cli_campaign_empty(capsys):
    rc, out, _ = _run(["campaign", "--instances", "0", "--seed", "1"], capsys)
    assert rc == 0
    doc = json.loads(out)
    assert doc["per_instance"] == [] and doc["violations_total"] == 0


def test_cli_campaign_deterministic(capsys, tmp_path):
    d1, d2 = tmp_path / "r1", tmp_path / "r2"
    for d in (d1, d2):
        rc, _, _ = _run(
            [
                "campaign",
                "--instances",
                "3",
                "--seed",
                "11",
                "--battery",
                "10",
                "--out",
                str(d),
            ],
            capsys,
        )
        assert rc == 0
    assert (d1 / "campaign.json").read_bytes() == (d2 / "campaign.json").read_bytes()
    assert (d1 / "campaign_instances.csv").read_bytes() == (
        d2 / "campaign_instances.csv"
    ).read_bytes()


def test_cli_input_error(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"atoms": ["a"]}')
    rc, _, err = _run(["certify", str(bad)], capsys)
    assert rc == 1
    doc = json.loads(err)
    assert doc["error"] == "schema"
    rc, _, err = _run(["certify", str(tmp_path / "missing.json")], capsys)
    assert rc == 1


def test_cli_mc_smoke(capsys, tmp_path):
    out_dir = tmp_path / "mc"
    rc, out, _ = _run(
        [
            "mc",
            "--model",
            "CAT-0",
            "--paths",
            "2000",
            "--dt",
            "0.005",
            "--seed",
            "3",
            "--out",
            str(out_dir),
        ],
        capsys,
    )
    assert rc == 0
    doc = json.loads(out)
    assert len(doc["estimates"]) == 3
    assert (out_dir / "mc_checkpoints.csv").exists()


def test_cli_theorems_precondition_branch(capsys, tmp_path):
    # a drifting price violates the base-NUPBR precondition of the
    # masked-increment theorem; the report flags it instead of guessing
    doc = _ex1_doc()
    doc["S"]["values"] = {
        "a": [["0"], ["1"], ["2"]],
        "b": [["0"], ["1"], ["2"]],
        "c": [["0"], ["1"], ["2"]],
        "d": [["0"], ["1"], ["2"]],
    }
    path = tmp_path / "drift.json"
    path.write_text(json.dumps(doc))
    rc, out, _ = _run(["theorems", str(path), "--battery", "5"], capsys)
    report = json.loads(out)
    assert report["masked_criterion"] == {"precondition_failed": True}
