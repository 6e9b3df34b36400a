import copy
import csv
import json

import numpy as np
import pytest

from reszono.errors import ConfigError
from reszono.harness import load_config, parse_config, run_scenario, with_overrides
from reszono.harness.cli import main
from reszono.harness.emit import CSV_COLUMNS, emit_all, load_jsonl, set_from_json, set_to_json
from reszono.setops import intersect, interval_hull, Zonotope


@pytest.fixture(scope="module")
def raw():
    return copy.deepcopy(load_config("rotating_target.json").raw)


@pytest.fixture(scope="module")
def short_report():
    return run_scenario(with_overrides(load_config("rotating_target.json"), seed=3, steps=8))


@pytest.mark.parametrize("mutate, path", [
    (lambda d: d["system"].pop("A"), "system"),
    (lambda d: d["system"].__setitem__("A", [[1.0, 0.0]]), "system.A"),
    (lambda d: d["sensors"][1].__setitem__("C", [[1.0, 2.0, 3.0]]), "sensors[1].C"),
    (lambda d: d["sensors"][2]["V"].__setitem__("center", [0.0]), "sensors[2].V.generators"),
    (lambda d: d.__setitem__("q", 3), "system"),
    (lambda d: d.__setitem__("p", 4), "p"),
    (lambda d: d["attack"].__setitem__("kind", "teleport"), "attack.kind"),
    (lambda d: d["attack"].__setitem__("magnitudes", [1.0]), "attack.magnitudes"),
    (lambda d: d["estimator"].__setitem__("prune", "shrink"), "estimator.prune"),
    (lambda d: d["run"].__setitem__("steps", 0), "run.steps"),
    (lambda d: d.__setitem__("colour", "red"), "<root>"),
])
def test_config_errors_name_the_field(raw, mutate, path):
    data = copy.deepcopy(raw)
    mutate(data)
    with pytest.raises(ConfigError) as err:
        parse_config(data)
    assert err.value.path == path
    assert str(err.value).startswith(path)


def test_state_bound_estimated_when_null(raw):
    cfg = parse_config(raw)
    assert cfg.state_bound_source == "estimated"
    assert cfg.system.state_bound == pytest.approx(91.87625029093208)
    data = copy.deepcopy(raw)
    data["system"]["state_bound"] = 120.0
    assert parse_config(data).state_bound_source == "config"


def test_bundled_scenarios_parse():
    cfg = load_config("stealthy_growth.json")
    assert cfg.estimator.policy_label == "none"
    assert cfg.attack.kind.value == "scripted"
    with pytest.raises(ConfigError):
        load_config("no_such_scenario.json")


def test_run_is_deterministic():
    cfg = with_overrides(load_config("rotating_target.json"), seed=11, steps=5)
    a, b = run_scenario(cfg), run_scenario(cfg)
    for ra, rb in zip(a.records, b.records):
        assert np.array_equal(ra.x_true, rb.x_true)
        assert ra.bound_radius == rb.bound_radius


def test_report_invariants(short_report):
    assert short_report.error is None
    assert short_report.invariants_ok
    assert len(short_report.records) == 8
    assert short_report.summary()["inclusion_rate"] == 1.0


def test_set_json_round_trip():
    cz = intersect(Zonotope([0.0, 0.0], np.eye(2)), Zonotope([0.5, 0.0], np.eye(2)))
    back = set_from_json(json.loads(json.dumps(set_to_json(cz))))
    assert np.array_equal(back.constraint_lhs, cz.constraint_lhs)
    box_a, box_b = interval_hull(cz), interval_hull(back)
    assert np.allclose(box_a.lower, box_b.lower)


def test_emit_all_outputs(short_report, tmp_path):
    paths = emit_all(short_report, tmp_path, snapshot_steps=(2,))
    records = load_jsonl(paths["jsonl"])
    assert [r["k"] for r in records] == list(range(1, 9))
    assert all(r["inclusion"] for r in records)
    with paths["csv"].open() as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert len(rows) == 9
    svg = paths["svg_2"].read_text()
    assert svg.startswith("<svg") and 'class="true-state"' in svg and 'class="members"' in svg
    assert json.loads(paths["summary"].read_text())["invariants_ok"] is True


def test_cli_check(capsys):
    assert main(["check", "--config", "rotating_target.json"]) == 0
    out = capsys.readouterr().out
    assert "all assumptions hold" in out and "spectral radius 0.976873" in out


def test_cli_run_and_snapshot(tmp_path, capsys):
    out_dir = tmp_path / "run"
    assert main(["run", "--config", "rotating_target.json", "--seed", "2", "--steps", "4",
                 "--out", str(out_dir), "--snapshots", "1,4"]) == 0
    assert (out_dir / "snapshot_k004.svg").exists()
    svg = tmp_path / "snap.svg"
    assert main(["snapshot", "--report", str(out_dir / "steps.jsonl"), "--k", "3", "--out", str(svg)]) == 0
    assert svg.read_text().count("<polygon") >= 4


def test_cli_sweep(capsys):
    assert main(["sweep", "--config", "rotating_target.json", "--seeds", "0..2", "--steps", "3",
                 "--max-sets", "4"]) == 0
    out = capsys.readouterr().out
    assert "3 runs, 9 steps" in out and "inclusion rate 1.000000" in out


def test_cli_reports_config_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"schema": 1}')
    assert main(["run", "--config", str(bad)]) == 2
    assert "error:" in capsys.readouterr().err


def test_cli_attack_override(tmp_path, capsys):
    assert main(["run", "--config", "rotating_target.json", "--seed", "0", "--steps", "2",
                 "--attack", "large_bias", "--out", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["attack"] == "large_bias" and summary["detected"] == [1]
