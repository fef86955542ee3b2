from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import make_system
from resvdw import dataset as dataset_mod
from resvdw.dataset import Dataset

values = st.lists(st.one_of(st.floats(allow_nan=False, allow_infinity=False, width=64), st.just(math.nan)),
                  min_size=1, max_size=20)


def sample(vals, diag=None):
    x = np.arange(len(vals), dtype=float)
    return Dataset.build("scan", "R_um", {"R_um": x, "causal": vals}, {"R_um": "um", "causal": "rad/s"},
                         make_system(), {"T_ps": 3.0}, diag, timestamp="2000-01-01T00:00:00+00:00")


def same(a: Dataset, b: Dataset):
    assert a.names == b.names and a.index == b.index
    assert a.units == b.units and a.metadata == b.metadata and a.diagnostics == b.diagnostics
    for n in a.names:
        np.testing.assert_array_equal(a[n], b[n])


@given(values)
def test_csv_round_trip(vals):
    ds = sample(vals)
    same(Dataset.from_csv(ds.to_csv()), ds)


@given(values)
def test_json_round_trip(vals):
    ds = sample(vals)
    same(Dataset.from_json(ds.to_json()), ds)


def test_csv_layout():
    ds = sample([1.5, math.nan], ["", "causal: CausalityError: x, y"])
    text = ds.to_csv()
    lines = text.splitlines()
    assert lines[0].startswith("# kind: ")
    header = next(line for line in lines if not line.startswith("#"))
    assert header == "R_um [um],causal [rad/s],diagnostics"
    assert lines[-1] == '1.0,,"causal: CausalityError: x, y"'
    same(Dataset.from_csv(text), ds)


def test_json_nulls():
    doc = json.loads(sample([math.nan]).to_json())
    assert doc["columns"]["causal"] == [None]
    assert doc["metadata"]["system_hash"] == make_system().hash()


def test_unequal_columns():
    with pytest.raises(ValueError):
        Dataset("x", "a", {"a": [1, 2], "b": [1]}, {})
    with pytest.raises(ValueError):
        Dataset("x", "a", {"b": [1]}, {})


def test_unknown_format():
    with pytest.raises(ValueError):
        sample([1.0]).dumps("xml")


def test_timestamp_sources(monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")
    ds = Dataset.build("k", "a", {"a": [1.0]}, {})
    assert ds.metadata["timestamp"] == "1970-01-01T00:00:00+00:00"
    monkeypatch.setattr(dataset_mod, "DEFAULT_TIMESTAMP", "fixed")
    assert Dataset.build("k", "a", {"a": [1.0]}, {}).metadata["timestamp"] == "fixed"
