import json
import subprocess
import sys
from pathlib import Path

import pytest

from sclab.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_OK, main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def write(tmp_path, cfg, name="c.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg) if not isinstance(cfg, str) else cfg)
    return p


@pytest.fixture
def outdir(tmp_path, monkeypatch):
    d = tmp_path / "out"
    monkeypatch.setenv("SCLAB_OUTPUT_DIR", str(d))
    return d


def test_degeneracy_run_passes(tmp_path, outdir):
    assert main(["run", str(CONFIGS / "degeneracy.json")]) == EXIT_OK
    rep = json.loads((outdir / "degeneracy.json").read_text())
    assert rep["schema"] == "scv/1" and rep["ok"] is True
    assert (outdir / "degeneracy.degeneracy.csv").read_text().startswith("x,y,index\n")
    meta = json.loads((outdir / "degeneracy.meta.json").read_text())
    assert "timestamp" in meta and meta["runtime_seconds"] >= 0


def test_failed_check_exits_one(tmp_path, outdir):
    cfg = json.loads((CONFIGS / "degeneracy.json").read_text())
    cfg["params"]["expected"] = [0, 0, 0]
    assert main(["run", str(write(tmp_path, cfg))]) == EXIT_FAIL
    assert json.loads((outdir / "degeneracy.json").read_text())["ok"] is False


def test_wrong_tameness_expectation_exits_one(tmp_path, outdir):
    cfg = json.loads((CONFIGS / "tame.json").read_text())
    cfg["params"]["retractions"][0]["expect_tame"] = True
    assert main(["run", str(write(tmp_path, cfg))]) == EXIT_FAIL


@pytest.mark.parametrize("bad", [
    "{not json",
    {"schema": "scv/9", "experiment": "degeneracy"},
    {"experiment": "nope"},
    {"experiment": "splicing"},                        # randomized without a seed
    {"experiment": "tame", "seed": 1, "colour": "red"},
    {"experiment": "chain-rule", "seed": 1, "templates": {"f": {"name": "missing"}}},
    {"experiment": "verify-scale", "ladder": [64, 32]},
])
def test_configuration_errors_exit_two(tmp_path, outdir, bad):
    assert main(["run", str(write(tmp_path, bad))]) == EXIT_CONFIG


def test_missing_file_exits_two(tmp_path, outdir):
    assert main(["run", str(tmp_path / "absent.json")]) == EXIT_CONFIG


def test_reports_are_byte_identical(tmp_path, monkeypatch):
    outs = []
    for k in range(2):
        d = tmp_path / f"o{k}"
        monkeypatch.setenv("SCLAB_OUTPUT_DIR", str(d))
        assert main(["run", str(CONFIGS / "splicing.json")]) == EXIT_OK
        outs.append(sorted(p for p in d.iterdir() if not p.name.endswith(".meta.json")))
    for a, b in zip(*outs):
        assert a.name == b.name and a.read_bytes() == b.read_bytes()


def test_output_dir_from_config(tmp_path, monkeypatch):
    monkeypatch.delenv("SCLAB_OUTPUT_DIR", raising=False)
    cfg = json.loads((CONFIGS / "degeneracy.json").read_text())
    cfg["output"] = {"dir": "res", "name": "deg"}
    assert main(["run", str(write(tmp_path, cfg))]) == EXIT_OK
    assert (tmp_path / "res" / "deg.json").exists()


def test_list_templates_and_schema(capsys):
    assert main(["list-templates"]) == EXIT_OK
    t = json.loads(capsys.readouterr().out)
    assert {"ddt_plus_one", "rank_smoothing"} <= set(t["operators"])
    assert "r_a" in t["retractions"]
    assert main(["schema"]) == EXIT_OK
    s = json.loads(capsys.readouterr().out)
    assert s["schema"] == "scv/1" and s["exit_codes"]["2"]
    assert "splicing" in s["experiments"]


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "sclab", "schema"], capture_output=True, text=True)
    assert out.returncode == 0 and json.loads(out.stdout)["output_env"] == "SCLAB_OUTPUT_DIR"
