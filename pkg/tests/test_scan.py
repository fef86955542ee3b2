from __future__ import annotations

import math

import numpy as np
import pytest

from conftest import make_system
from resvdw.atoms import C_LIGHT, HBAR, fig3_system
from resvdw.closed_form import energy_adiabatic, energy_full
from resvdw.contour import evaluate_causal
from resvdw.errors import InsufficientResolution
from resvdw.scan import (
    ScanSpec,
    beat_analysis,
    first_maximum,
    parse_range,
    scan,
    spectral_concentration,
    time_average,
    worker_count,
)

STAMP = "2000-01-01T00:00:00+00:00"


def test_parse_range():
    assert parse_range("20:120:4000") == (20.0, 120.0, 4000)
    assert parse_range("3.0") == (3.0, 3.0, 1)
    for bad in ("1:2", "5:1:10", "a:b:c", "1:2:0", ""):
        with pytest.raises(ValueError):
            parse_range(bad)


def test_worker_count(monkeypatch):
    monkeypatch.setenv("VDW_THREADS", "1")
    assert worker_count() == 1
    monkeypatch.setenv("VDW_THREADS", "junk")
    assert worker_count() >= 1


def test_spec_validation():
    with pytest.raises(ValueError):
        ScanSpec("Q", 1, 2, 3, 0)
    with pytest.raises(ValueError):
        ScanSpec("R", 2, 1, 3, 0)
    with pytest.raises(ValueError):
        ScanSpec("R", 1e-6, 2e-6, 3, 0, ("bogus",))
    with pytest.raises(ValueError):
        ScanSpec("R", 1e-6, 2e-6, 3, 0, units="eV")


@pytest.mark.parametrize("method", ["closed-form", "causal", "quadrature", "adiabatic"])
def test_single_point_equals_direct_call(method, single):
    single = single.at(2e-6)
    T = 3e-13
    ds = scan(single, ScanSpec("R", single.R, single.R, 1, T, (method,)))
    assert len(ds) == 1
    direct = {"closed-form": lambda: energy_full(single, T),
              "causal": lambda: evaluate_causal(single, T),
              "adiabatic": lambda: energy_adiabatic(single)}
    if method == "quadrature":
        ref = energy_full(single, T).value
        assert ds[method][0] * HBAR == pytest.approx(ref, rel=1e-4)
    else:
        assert ds[method][0] == direct[method]().value / HBAR


def test_fig3_far_field_and_adiabatic_columns():
    s = fig3_system()
    a = scan(s, ScanSpec("R", 20e-6, 21e-6, 50, 3e-12, ("far-field", "adiabatic")), STAMP)
    b = scan(s, ScanSpec("R", 20e-6, 21e-6, 50, 5e-12, ("far-field", "adiabatic")), STAMP)
    assert a.names == ["R_um", "far-field", "adiabatic"]
    np.testing.assert_array_equal(a["adiabatic"], b["adiabatic"])
    assert not np.array_equal(a["far-field"], b["far-field"])


def test_t_scan_plateau_then_oscillation(single):
    front = 2 * single.R / C_LIGHT
    period = 2 * math.pi / abs(single.detunings[0])
    ds = scan(single, ScanSpec("T", 0.5 * front, front + 3 * period, 60, single.R, ("causal", "closed-form")))
    T = ds["T_ps"] * 1e-12
    before = T <= front
    assert np.all(ds["causal"][before] == 0.0)
    assert np.all(ds["causal"][~before] != 0.0)
    np.testing.assert_allclose(ds["causal"], ds["closed-form"], rtol=1e-9, atol=0)


def test_per_line_and_units():
    s = fig3_system()
    ds = scan(s, ScanSpec("R", 30e-6, 31e-6, 5, 3e-12, ("closed-form",), per_line=True, units="scaled"))
    np.testing.assert_allclose(ds["closed-form[line0]"] + ds["closed-form[line1]"], ds["closed-form"], rtol=1e-12)
    R = ds["R_um"] * 1e-6
    direct = np.array([energy_full(s.at(r), 3e-12).value * r**6 / s.U0 for r in R])
    np.testing.assert_allclose(ds["closed-form"], direct, rtol=1e-12)
    assert ds.units["closed-form"] == "1"


def test_failing_rows_become_nan():
    s = make_system()
    ds = scan(s, ScanSpec("R", 0.2e-6, 3.0e-6, 5, 1e-12, ("far-field",)))
    assert np.isnan(ds["far-field"][0]) and "threshold" in ds.diagnostics[0]
    assert np.isfinite(ds["far-field"][-1]) and ds.diagnostics[-1] == ""


def test_determinism(monkeypatch):
    s = fig3_system()
    spec = ScanSpec("R", 30e-6, 31e-6, 7, 3e-12, ("closed-form", "causal"))
    monkeypatch.setenv("VDW_THREADS", "1")
    a = scan(s, spec, STAMP).to_csv()
    monkeypatch.setenv("VDW_THREADS", "4")
    b = scan(s, spec, STAMP).to_csv()
    assert a == b
    assert a.encode() == scan(s, spec, STAMP).to_csv().encode()


def _fig3_beats(n):
    s = fig3_system()
    ds = scan(s, ScanSpec("R", 20e-6, 120e-6, n, 3e-12))
    return beat_analysis(ds, "closed-form")


def test_beat_periods_fig3():
    b = _fig3_beats(4000)
    assert b.short_period == pytest.approx(0.390709353538946e-6, rel=0.02)
    assert b.long_period == pytest.approx(11.45283835693e-6, rel=0.02)


def test_beat_refinement_stability():
    a, b = _fig3_beats(4000), _fig3_beats(8000)
    assert b.short_period == pytest.approx(a.short_period, rel=0.01)
    assert b.long_period == pytest.approx(a.long_period, rel=0.01)


def test_beat_ratio_construction():
    s = make_system(10000.0, (10100.0,))
    short = 2 * math.pi / (s.atom_A.k + s.lines_B[0].k)
    ds = scan(s, ScanSpec("R", 100e-6, 100e-6 + 600 * short, 6000, 1e-9))
    b = beat_analysis(ds, "closed-form")
    assert b.long_period / b.short_period == pytest.approx(100.5, rel=0.03)


def test_beat_needs_resolution():
    s = fig3_system()
    ds = scan(s, ScanSpec("R", 20e-6, 120e-6, 400, 3e-12))
    with pytest.raises(InsufficientResolution):
        beat_analysis(ds, "closed-form")
    with pytest.raises(InsufficientResolution):
        beat_analysis(scan(s, ScanSpec("R", 20e-6, 21e-6, 8, 3e-12)), "closed-form")


def test_time_average_integer_periods(single):
    period = 2 * math.pi / abs(single.detunings[0])
    res = time_average(single, 10 * period)
    assert res.value == pytest.approx(energy_adiabatic(single).value, rel=1e-10)
    assert res.components["periods"] == pytest.approx(10.0)


def test_time_average_long_window(single):
    period = 2 * math.pi / abs(single.detunings[0])
    res = time_average(single, 1000.3 * period)
    assert res.value == pytest.approx(energy_adiabatic(single).value, rel=1e-3)


def test_time_average_before_front(single):
    front = 2 * single.R / C_LIGHT
    assert time_average(single, 0.4 * front, start=0.1 * front).value == 0.0


def test_time_average_causal_path():
    s = make_system(R=2e-6)
    period = 2 * math.pi / abs(s.detunings[0])
    a = time_average(s, 3.3 * period, method="causal", nodes_per_period=8)
    b = time_average(s, 3.3 * period, method="closed-form", nodes_per_period=8)
    assert a.value == pytest.approx(b.value, rel=1e-9)
    with pytest.raises(ValueError):
        time_average(s, period, method="quadrature")


def test_spectral_helpers():
    t = np.linspace(0, 20, 2000, endpoint=False)
    y = 3 + np.cos(2 * math.pi * t)
    assert spectral_concentration(y, t[1] - t[0], 2 * math.pi) > 0.99
    assert first_maximum(t, np.where(t > 0.3, np.sin(math.pi * (t - 0.3)), 0.0)) == pytest.approx(0.8, abs=0.01)
    with pytest.raises(ValueError):
        first_maximum(t, np.zeros_like(t))
