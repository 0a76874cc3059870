import io
import json
from pathlib import Path

import numpy as np
import pytest

from nestjt.cli import run
from nestjt.fixtures import bundled_networks, random_network
from nestjt.model import dumps_network, load_network

GOLDEN = Path(__file__).parent / "golden"


def call(*argv):
    out = io.StringIO()
    code = run(list(argv), out)
    return code, out.getvalue()


def test_costs_fixture_gamma0():
    code, text = call("costs", "--fixture", "munin1", "--gamma", "0", "--format", "json")
    assert code == 0
    (row,) = json.loads(text)
    assert row["conv_space"] == 2_625_000 and row["nested_space"] == 81_730
    assert round(row["space_saving_pct"]) == 97


def test_costs_tsv_golden():
    code, text = call("costs", "--fixture", "munin1", "--format", "tsv")
    assert code == 0
    assert text == (GOLDEN / "costs_munin1.tsv").read_text()
    assert "-6550%" in text  # regressions print as negative savings


def test_plan_golden():
    code, text = call("plan", "--fixture", "munin1", "--gamma", "0")
    assert code == 0
    assert text == (GOLDEN / "plan_munin1_gamma0.txt").read_text()


def test_plan_depth_depends_on_gamma():
    depths = {}
    for g in ("0", "0.3"):
        code, text = call("plan", "--fixture", "munin1", "--gamma", g, "--format", "json")
        assert code == 0
        plan = json.loads(text)["plan"]
        d = 1
        while plan["kind"] == "nested":
            d += 1
            plan = plan["sends"][0]["plan"]
        depths[g] = d
    assert depths == {"0": 4, "0.3": 2}


def test_plan_on_network():
    code, text = call("plan", "--fixture", "asia", "--gamma", "0.3")
    assert code == 0 and text.startswith("network asia")
    assert "send C" in text


@pytest.mark.parametrize("name", sorted(bundled_networks()))
@pytest.mark.parametrize("method", ["hugin", "ss"])
def test_marginals_match_oracle(name, method):
    path = bundled_networks()[name]
    _, a = call("marginals", path, "--method", method, "--gamma", "0", "--format", "json")
    _, b = call("oracle", path)
    ma, mb = json.loads(a)["marginals"], json.loads(b)["marginals"]
    assert ma.keys() == mb.keys()
    for var in ma:
        for state in ma[var]:
            assert abs(ma[var][state] - mb[var][state]) <= 1e-9 * max(mb[var][state], 1e-300)


def test_marginals_with_evidence_and_selection():
    path = bundled_networks()["asia"]
    _, a = call("marginals", path, "--evidence", "xray=yes", "--var", "lung", "--format", "json")
    _, b = call("oracle", path, "--evidence", "xray=yes", "--var", "lung")
    da, db = json.loads(a), json.loads(b)
    assert list(da["marginals"]) == ["lung"] and da["evidence"] == {"xray": "yes"}
    assert da["marginals"]["lung"]["yes"] == pytest.approx(db["marginals"]["lung"]["yes"], rel=1e-9)


def test_trace_goes_to_stderr(capsys):
    code, text = call("marginals", "--fixture", "chain4", "--trace")
    err = capsys.readouterr().err.splitlines()
    assert code == 0 and err and all(line.split()[0] in ("inward", "outward") for line in err)
    assert "inward" not in text


def test_deterministic_output():
    for argv in (("costs", "--fixture", "random", "--seed", "5"), ("plan", "--fixture", "random", "--seed", "5"),
                 ("marginals", "--fixture", "random", "--seed", "5")):
        assert call(*argv) == call(*argv)


def test_json_outputs_parse_and_network_round_trips(tmp_path):
    spec = load_network(bundled_networks()["sprinkler"])
    path = tmp_path / "copy.json"
    path.write_text(dumps_network(spec))
    again = load_network(path)
    assert [v.name for v in again.variables] == [v.name for v in spec.variables]
    code, text = call("marginals", str(path), "--format", "json")
    doc = json.loads(text)
    assert code == 0 and doc["network"] == "copy"
    for dist in doc["marginals"].values():
        assert abs(sum(dist.values()) - 1) < 1e-12


def test_exit_code_validation(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"variables": [{"name": "X", "states": ["a"]}], "cpts": [}')
    assert call("marginals", str(bad))[0] == 1
    assert "line 1" in capsys.readouterr().err
    assert call("marginals", str(tmp_path / "missing.json"))[0] == 1
    assert call("marginals", "--fixture", "asia", "--evidence", "nope=yes")[0] == 1
    assert call("marginals", "--fixture", "asia", "--evidence", "xray=maybe")[0] == 1
    assert call("costs", "--fixture", "munin1", "--gamma", "-1")[0] == 1
    assert call("marginals", "--fixture", "munin1")[0] == 1


def test_exit_code_inconsistent():
    code, _ = call("marginals", "--fixture", "asia", "--evidence", "either=no", "--evidence", "tub=yes")
    assert code == 2


def test_exit_code_resource(tmp_path):
    spec = random_network(np.random.default_rng(0), 24, max_parents=1, cards=(2, 2))
    path = tmp_path / "big.json"
    path.write_text(dumps_network(spec))
    assert call("oracle", str(path))[0] == 3
    assert call("marginals", str(path))[0] == 0
