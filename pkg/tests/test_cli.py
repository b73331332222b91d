import csv
import json
import subprocess
import sys

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jetflow.cli import DEFAULTS, SCHEMAS, ConfigError, config_hash, main, resolve_config, validate
from jetflow.group import DiffeoRep


def run(tmp_path, *args, config=None):
    argv = list(args) + ["--out", str(tmp_path / "out"), "--quiet"]
    if config is not None:
        path = tmp_path / "cfg.json"
        path.write_text(config if isinstance(config, str) else json.dumps(config))
        argv += ["--config", str(path)]
    return main(argv)


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


SMALL_JETS = {"compose": {"pairs": 4, "K_max": 3}, "childress_n": 4, "majorant": {"max_order": 3}}


# -- configuration errors -----------------------------------------------------------


def test_unknown_top_level_key(tmp_path, capsys):
    assert run(tmp_path, "jets", config={"bogus": 1}) == 2
    assert "$.bogus" in capsys.readouterr().err


def test_unknown_nested_key(tmp_path, capsys):
    assert run(tmp_path, "jets", config={"compose": {"pairs": 2, "typo": 3}}) == 2
    assert "$.compose.typo" in capsys.readouterr().err


def test_unknown_key_inside_list(tmp_path, capsys):
    cfg = {"fields": [{"name": "a", "field": {"kind": "separable"}, "extra": 0}]}
    assert run(tmp_path, "flow", config=cfg) == 2
    assert "$.fields[0].extra" in capsys.readouterr().err


def test_wrong_type(tmp_path, capsys):
    assert run(tmp_path, "bergman", config={"r": "wide"}) == 2
    assert "$.r" in capsys.readouterr().err


@pytest.mark.parametrize("text", ["{not json", "[1, 2]"])
def test_malformed_config(tmp_path, text):
    assert run(tmp_path, "sequences", config=text) == 2


def test_missing_config_file(tmp_path):
    assert main(["sequences", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 2


def test_subcommand_mismatch(tmp_path, capsys):
    assert run(tmp_path, "sequences", config={"subcommand": "flow"}) == 2
    assert "$.subcommand" in capsys.readouterr().err


def test_semantic_grid_error_is_config_error(tmp_path, capsys):
    cfg = {"grid": {"d": 1, "extent": 3.0, "n": 20, "quadrature": "simpson"}}
    assert run(tmp_path, "flow", config=cfg) == 2
    assert "$.grid" in capsys.readouterr().err


def test_bad_profile_kind(tmp_path, capsys):
    cfg = {"diffeos": [{"profile": {"kind": "nonsense"}}]}
    assert run(tmp_path, "group", config=cfg) == 2
    assert "$.diffeos[0].profile" in capsys.readouterr().err


@pytest.mark.parametrize("tol", ["abc", "flow=", "flow=-1"])
def test_bad_tol_override(tmp_path, tol):
    assert run(tmp_path, "flow", "--tol", tol) == 2


def test_unknown_probe(tmp_path, capsys):
    assert run(tmp_path, "continuity", config={"probes": ["probe99"]}) == 2
    assert "$.probes[0]" in capsys.readouterr().err


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(sorted(SCHEMAS)), st.text("abcdefghijklmnopqrstuvwxyz_", min_size=1, max_size=12))
def test_any_unknown_key_is_named(sub, key):
    if key in SCHEMAS[sub] or key in ("subcommand", "seed", "jobs", "tol"):
        return
    with pytest.raises(ConfigError) as exc:
        validate(sub, {key: 0})
    assert exc.value.path == f"$.{key}"


@pytest.mark.parametrize("sub", sorted(DEFAULTS))
def test_defaults_are_valid(sub):
    validate(sub, resolve_config(sub, None, None, None, {}))


# -- numerical failures -----------------------------------------------------------------


def test_non_bijective_inversion_exits_3(tmp_path, capsys):
    cfg = {"action": "invert", "diffeos": [{"name": "fold", "profile": {"kind": "x_gauss", "amplitude": -2.0}}]}
    assert run(tmp_path, "group", config=cfg) == 3
    assert "InversionError" in capsys.readouterr().err


def test_inclusion_precondition_exits_3(tmp_path, capsys):
    assert run(tmp_path, "bergman", "verify-inclusion", config={"sigma": 1.5}) == 3
    assert "sigma" in capsys.readouterr().err


# -- reports ----------------------------------------------------------------------------------


def test_empty_corpus(tmp_path):
    assert run(tmp_path, "continuity", config={"probes": []}) == 0
    assert read_csv(tmp_path / "out" / "continuity.csv") == []
    summary = json.loads((tmp_path / "out" / "continuity.json").read_text())
    assert summary["rows"] == 0


def test_empty_jets(tmp_path):
    assert run(tmp_path, "jets", config={"compose": {"pairs": 0}, "sequences": []}) == 0
    assert read_csv(tmp_path / "out" / "jets.csv") == []


def test_same_seed_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        d.mkdir()
        assert run(d, "jets", "--seed", "7", config=SMALL_JETS) == 0
    for name in ("jets.csv", "jets.json"):
        assert (a / "out" / name).read_bytes() == (b / "out" / name).read_bytes()


def test_seed_changes_corpus(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir(), b.mkdir()
    run(a, "jets", "--seed", "1", config=SMALL_JETS)
    run(b, "jets", "--seed", "2", config=SMALL_JETS)
    assert (a / "out" / "jets.csv").read_bytes() != (b / "out" / "jets.csv").read_bytes()


def test_rows_carry_metadata(tmp_path):
    assert run(tmp_path, "norms") == 0
    rows = read_csv(tmp_path / "out" / "norms.csv")
    assert rows and all(r["K_max"] != "" and r["grid"] for r in rows)
    assert {json.loads(r["grid"])["n"] for r in rows} == {257}


def test_summary_records_config_hash(tmp_path):
    assert run(tmp_path, "sequences", "--seed", "3") == 0
    doc = json.loads((tmp_path / "out" / "sequences.json").read_text())
    assert doc["seed"] == 3
    assert doc["config_hash"] == config_hash("sequences", doc["config"])


def test_tol_override(tmp_path):
    assert run(tmp_path, "jets", "--tol", "fdb=1e-12", config=SMALL_JETS) == 0
    rows = read_csv(tmp_path / "out" / "jets.csv")
    assert {r["tol"] for r in rows} == {"1e-12"}


def test_sequences_classification(tmp_path):
    assert run(tmp_path, "sequences") == 0
    rows = {r["sequence"]: r for r in read_csv(tmp_path / "out" / "sequences.csv")}
    assert rows["one"]["strictly_regular"] == "false" and rows["one"]["quasianalytic_trend"] == "diverging"
    assert rows["gevrey1"]["strictly_regular"] == "true" and rows["gevrey1"]["quasianalytic_trend"] == "converging"


def test_flow_export_columns_and_jobs(tmp_path):
    cfg = {
        "times": [0.0, 1.0],
        "fields": [
            {"name": "sin", "field": {"kind": "separable", "profile": {"kind": "sin"}}},
            {"name": "g", "field": {"kind": "separable", "profile": {"kind": "gaussian", "amplitude": 0.5}}},
        ],
    }
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir(), b.mkdir()
    assert run(a, "flow", config=cfg) == 0
    assert run(b, "flow", "--jobs", "2", config=cfg) == 0
    text = (a / "out" / "flow.csv").read_text()
    assert text == (b / "out" / "flow.csv").read_text()
    rows = read_csv(a / "out" / "flow.csv")
    assert list(rows[0])[:5] == ["field", "t", "x0", "phi0", "det"]
    assert all(float(r["det"]) > 0 for r in rows)
    assert all(float(r["phi0"]) == 0 for r in rows if r["t"] == "0.0")


def test_group_invert_exports_loadable_json(tmp_path):
    assert run(tmp_path, "group", "invert") == 0
    inv = DiffeoRep.from_json((tmp_path / "out" / "gauss.inverse.json").read_text())
    assert inv.det_inf > 0
    cfg = {"action": "verify", "diffeos": [{"name": "inv", "json": str(tmp_path / "out" / "gauss.inverse.json")}]}
    assert run(tmp_path, "group", config=cfg) == 0
    assert read_csv(tmp_path / "out" / "group-verify.csv")[0]["member"] == "true"


def test_group_rejects_profile_and_json_together(tmp_path, capsys):
    cfg = {"diffeos": [{"profile": {"kind": "zero"}, "json": "x.json"}]}
    assert run(tmp_path, "group", config=cfg) == 2
    assert "$.diffeos[0]" in capsys.readouterr().err


def test_bergman_actions(tmp_path):
    assert run(tmp_path, "bergman", "norms") == 0
    norms = read_csv(tmp_path / "out" / "bergman-norms.csv")
    # only the widest Gaussian is still above the tail tolerance at |Re z| = 8
    assert [r["tail_warning"] for r in norms] == ["false"] * 4 + ["true"]
    assert run(tmp_path, "bergman", "verify-inclusion") == 0
    doc = json.loads((tmp_path / "out" / "bergman-verify-inclusion.json").read_text())
    assert doc["summary"]["bounded"] is True
    assert run(tmp_path, "bergman", "ode-demo", config={"levels": [2, 4]}) == 0
    doc = json.loads((tmp_path / "out" / "bergman-ode-demo.json").read_text())
    assert doc["summary"]["finite"] and doc["summary"]["shrinking"]


def test_positional_action_overrides_config(tmp_path):
    assert run(tmp_path, "bergman", "norms", config={"action": "ode-demo"}) == 0
    assert (tmp_path / "out" / "bergman-norms.csv").exists()


def test_suite_subset(tmp_path, capsys):
    assert main(["suite", "--out", str(tmp_path), "--config", str(_write(tmp_path, {"criteria": [9, 10]}))]) == 0
    out = capsys.readouterr().out
    assert out.count("[PASS]") == 2
    rows = read_csv(tmp_path / "suite.csv")
    assert [r["criterion"] for r in rows] == ["9", "10"]


def test_suite_failure_exits_3(tmp_path, capsys):
    # an impossible tolerance makes the flow check fail
    assert run(tmp_path, "suite", "--tol", "flow=1e-30", config={"criteria": [3]}) == 3
    assert "failed: [3]" in capsys.readouterr().err


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "jetflow", "sequences", "--out", str(tmp_path)],
                         capture_output=True, text=True)
    assert res.returncode == 0 and (tmp_path / "sequences.csv").exists()


def _write(tmp_path, cfg):
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg))
    return p
