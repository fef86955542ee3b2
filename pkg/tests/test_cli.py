from __future__ import annotations

import json
import math
import shutil
import subprocess

import numpy as np
import pytest

from conftest import random_point
from resvdw.atoms import C_LIGHT, dump_system, fig3_system
from resvdw.cli import main
from resvdw.dataset import Dataset


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def fig3_file(tmp_path):
    path = tmp_path / "fig3.json"
    path.write_text(dump_system(fig3_system()))
    return str(path)


def test_eval_closed_form(capsys, fig3_file):
    code, out, _ = run(capsys, "eval", "--system", fig3_file, "--T-ps", "3.0", "--R-um", "30",
                       "--method", "closed-form")
    assert code == 0
    doc = json.loads(out)
    assert doc["method"] == "closed-form"
    assert doc["R_um"] == pytest.approx(30.0)
    assert {"value_rad_per_s", "value_scaled"} <= set(doc)
    assert "value_J" not in doc


def test_eval_joules_and_average(capsys):
    code, out, _ = run(capsys, "eval", "--R-um", "30", "--average-window-periods", "20", "--joules")
    assert code == 0
    doc = json.loads(out)
    assert doc["method"] == "time-average:closed-form" and "value_J" in doc
    code, out, _ = run(capsys, "eval", "--R-um", "30", "--method", "adiabatic")
    # two lines never share an integer number of periods, so the edges leak a little
    assert json.loads(out)["value_scaled"] == pytest.approx(doc["value_scaled"], rel=1e-2)


def test_eval_prescriptions(capsys):
    vals = {}
    for p in ("adiabatic", "stationary-pv", "pt1995"):
        code, out, _ = run(capsys, "eval", "--R-um", "30", "--T-ps", "3", "--method", "causal", "--prescription", p)
        assert code == 0
        vals[p] = json.loads(out)["value_rad_per_s"]
    scale = max(abs(v) for v in vals.values())
    assert abs(vals["stationary-pv"] - 0.5 * (vals["adiabatic"] + vals["pt1995"])) < 1e-3 * scale


def test_compare(capsys, fig3_file):
    code, out, _ = run(capsys, "compare", "--system", fig3_file, "--T-ps", "3.0", "--R-um", "25:45:20")
    assert code == 0
    ds = Dataset.from_csv(out)
    assert len(ds) == 20
    assert {"causal", "adiabatic", "stationary-pv", "pt1995"} <= set(ds.names)


def test_validate(capsys, fig3_file):
    code, out, _ = run(capsys, "validate", "--system", fig3_file)
    assert code == 0
    assert json.loads(out)["quasi_resonant_all"] is True


def test_scan_json_and_out(capsys, tmp_path):
    target = tmp_path / "scan.json"
    code, out, _ = run(capsys, "scan", "--R-um", "30:31:5", "--T-ps", "3", "--method", "closed-form,adiabatic",
                       "--per-line", "--format", "json", "--out", str(target))
    assert code == 0 and out == ""
    ds = Dataset.from_json(target.read_text())
    assert ds.names == ["R_um", "closed-form", "closed-form[line0]", "closed-form[line1]",
                        "adiabatic", "adiabatic[line0]", "adiabatic[line1]"]


def test_scan_uses_system_defaults(capsys):
    code, out, _ = run(capsys, "scan", "--method", "adiabatic")
    assert code == 0
    assert len(Dataset.from_csv(out)) == 4000


def test_scan_reports_bad_rows(capsys):
    code, out, err = run(capsys, "scan", "--R-um", "0.2:3:4", "--T-ps", "1", "--method", "far-field")
    assert code == 0 and "threshold" in err


def test_beat(capsys):
    code, out, _ = run(capsys, "beat", "--T-ps", "3", "--R-um", "20:120:4000")
    assert code == 0
    doc = json.loads(out)
    assert doc["long_period_um"] == pytest.approx(doc["expected_long_period_um"], rel=0.02)
    assert doc["short_period_um"] == pytest.approx(doc["expected_short_period_um"], rel=0.02)


def test_probability(capsys, tmp_path):
    code, _, err = run(capsys, "probability", "--T-ps", "0:1:5")
    assert code == 1 and "MultiLine" in err
    one = tmp_path / "one.json"
    doc = json.loads(dump_system(fig3_system()))
    doc["atoms"]["B"]["lines"] = doc["atoms"]["B"]["lines"][:1]
    one.write_text(json.dumps(doc))
    code, out, _ = run(capsys, "probability", "--system", str(one), "--T-ps", "0:1:11")
    assert code == 0
    p = Dataset.from_csv(out)["P_B"]
    assert p[0] == 0.0 and np.all((p >= 0) & (p <= 1))


@pytest.mark.parametrize("argv", [
    [],
    ["frobnicate"],
    ["eval", "--bogus"],
    ["eval", "--method", "closed-form"],
    ["eval", "--T-ps", "1:2"],
    ["scan", "--R-um", "1:2:3", "--T-ps", "1:2:3"],
    ["beat", "--R-um", "30", "--T-ps", "3"],
    ["compare", "--R-um", "25:30:3", "--T-ps", "1:2:3"],
    ["eval", "--T-ps", "3", "--method", "far-field", "--average-window-periods", "20"],
])
def test_usage_errors(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2
    assert out == "" and err


def test_domain_errors(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"atoms": {"A": {"nu_tilde_cm": -1}, "B": {"lines": [{"nu_tilde_cm": 1}]}}}')
    code, _, err = run(capsys, "validate", "--system", str(bad))
    assert code == 1 and "atoms.A.nu_tilde_cm" in err
    code, _, err = run(capsys, "validate", "--system", str(tmp_path / "missing.json"))
    assert code == 1
    code, _, err = run(capsys, "eval", "--R-um", "0.5", "--T-ps", "3", "--method", "far-field")
    assert code == 1 and "FarFieldDomain" in err


def test_mask_term_flag(capsys):
    args = ["eval", "--R-um", "2", "--T-ps", "0.1", "--method", "causal"]
    _, full, _ = run(capsys, *args)
    _, masked, _ = run(capsys, *args, "--mask-term", "mixed-k", "--mask-term", "mixed-k'")
    assert json.loads(full)["value_rad_per_s"] != json.loads(masked)["value_rad_per_s"]


def test_causal_and_closed_form_agree_over_random_flags(capsys, tmp_path):
    rng = np.random.default_rng(11)
    for i in range(20):
        system, T = random_point(rng, lines=1 + i % 2)
        path = tmp_path / f"sys{i}.json"
        path.write_text(dump_system(system))
        common = ["--system", str(path), "--T-ps", repr(float(T) / 1e-12), "--R-um", repr(system.R / 1e-6)]
        extra = [[], ["--joules"], ["--format", "json"], ["--order", "k-first"]][int(rng.integers(4))]
        vals = []
        for method in ("closed-form", "causal"):
            code, out, err = run(capsys, "eval", *common, "--method", method, *extra)
            assert code == 0, err
            vals.append(json.loads(out)["value_rad_per_s"])
        assert vals[1] == pytest.approx(vals[0], rel=1e-9)


@pytest.mark.skipif(shutil.which("resvdw") is None, reason="console script not installed")
def test_console_script():
    proc = subprocess.run(["resvdw", "validate"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["quasi_resonant_all"] is True
    proc = subprocess.run(["resvdw", "eval", "--nope"], capture_output=True, text=True)
    assert proc.returncode == 2 and "usage:" in proc.stderr
