import json
import time

import pytest
import yaml

from kinshock.cli import main
from kinshock.config import PARAM_SCHEMA, SCENARIOS, parse_config, serialize_config
from kinshock.errors import ConfigError
from kinshock.model import build_synthetic_model, save_model
from kinshock.runner import run


def test_minimal_config_fills_defaults():
    cfg = parse_config("scenario: profile\nmodel: {preset: demo-m1}\n")
    assert cfg.seed == 0 and cfg.workers == 1
    assert set(cfg.params) == set(PARAM_SCHEMA["profile"])
    assert cfg.params["eps"] == 0.04


def test_validation_errors():
    with pytest.raises(ConfigError, match="params.tol"):
        parse_config("scenario: reduce\nparams: {tol: -1}\n")
    with pytest.raises(ConfigError) as exc:
        parse_config("scenario: reduce\ncolour: red\nparams: {bogus: 1}\n")
    assert len(exc.value.problems) == 2
    with pytest.raises(ConfigError, match="line"):
        parse_config("scenario: [reduce\n")
    with pytest.raises(ConfigError, match="order"):
        parse_config("scenario: sweep\nparams: {order: 2}\n")


@pytest.mark.parametrize("scenario", SCENARIOS)
def test_round_trip(scenario):
    cfg = parse_config(f"scenario: {scenario}\nseed: 3\n")
    once = serialize_config(cfg)
    assert serialize_config(parse_config(once)) == once


def _config(tmp_path, scenario, **params):
    doc = {"scenario": scenario, "model": {"preset": "demo-m1"}, "seed": 2,
           "out": str(tmp_path / "missing" / "dir"), "params": params}
    path = tmp_path / "run.yaml"
    path.write_text(yaml.safe_dump(doc))
    return path


def test_profile_run_and_determinism(tmp_path):
    path = _config(tmp_path, "profile")
    cfg = parse_config(path.read_text())
    t0 = time.perf_counter()
    first = run(cfg, tmp_path / "a")
    assert time.perf_counter() - t0 < 60
    second = run(cfg, tmp_path / "b")
    assert not first.failed, first.details
    assert first.files == second.files
    man = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert {f["name"] for f in man["files"]} >= {"profile.csv"}


def test_cli_exit_codes(tmp_path, capsys):
    path = _config(tmp_path, "reduce")
    assert main(["reduce", "--config", str(path)]) == 0
    assert (tmp_path / "missing" / "dir" / "manifest.json").exists()
    assert main(["reduce", "--config", str(tmp_path / "absent.yaml")]) == 2
    assert main(["bogus", "--config", str(path)]) == 2
    bad = tmp_path / "bad.yaml"
    bad.write_text("params: {tol: -1}\n")
    assert main(["reduce", "--config", str(bad)]) == 2
    assert main(["reduce", "--config", str(path), "--seed", "-1"]) == 2


def test_cli_fail_exit(tmp_path):
    # a model file violating the hypotheses gives a failed verdict
    m = build_synthetic_model(r=1, n=3, m=0)
    B = m.B.copy()
    B[:, 0, 1] += 1.0
    bad = type(m)(A=m.A, vperp_basis=m.vperp_basis, v_basis=m.v_basis, B=B, u_bar=m.u_bar)
    save_model(bad, tmp_path / "bad.json")
    cfg = tmp_path / "c.yaml"
    cfg.write_text(yaml.safe_dump({"model": {"file": str(tmp_path / "bad.json")},
                                   "out": str(tmp_path / "o")}))
    assert main(["check-hypotheses", "--config", str(cfg)]) == 1
    man = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert man["verdicts"]["hypotheses"] == "fail"
