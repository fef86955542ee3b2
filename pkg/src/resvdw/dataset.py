"""Tabular results with units, metadata and CSV/JSON serialization."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any, Mapping

import numpy as np

#: Set to a fixed string (or pass ``timestamp=``) for byte-identical output.
DEFAULT_TIMESTAMP: str | None = None


def _now() -> str:
    """Creation time; SOURCE_DATE_EPOCH pins it for reproducible output."""
    if DEFAULT_TIMESTAMP is not None:
        return DEFAULT_TIMESTAMP
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    when = datetime.fromtimestamp(int(epoch), timezone.utc) if epoch else datetime.now(timezone.utc)
    return when.replace(microsecond=0).isoformat()


def _jsonable(v: float) -> float | None:
    return None if math.isnan(v) else float(v)


@dataclass
class Dataset:
    """Named float columns (NaN marks a missing value) with per-row diagnostics."""

    kind: str
    index: str
    columns: dict[str, np.ndarray]
    units: dict[str, str]
    metadata: dict[str, Any] = field(default_factory=dict)
    diagnostics: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.columns = {k: np.asarray(v, dtype=float) for k, v in self.columns.items()}
        lengths = {len(v) for v in self.columns.values()}
        if len(lengths) > 1:
            raise ValueError(f"columns have unequal lengths {sorted(lengths)}")
        if self.index not in self.columns:
            raise ValueError(f"index column {self.index!r} missing")
        if not self.diagnostics:
            self.diagnostics = [""] * len(self)

    @classmethod
    def build(cls, kind: str, index: str, columns: Mapping[str, Any], units: Mapping[str, str],
              system=None, params: Mapping[str, Any] | None = None, diagnostics=None,
              timestamp: str | None = None) -> "Dataset":
        meta: dict[str, Any] = {"kind": kind, "timestamp": timestamp or _now()}
        if system is not None:
            meta["system_hash"] = system.hash()
        if params:
            meta["params"] = dict(params)
        return cls(kind, index, dict(columns), dict(units), meta, list(diagnostics or []))

    def __len__(self) -> int:
        return len(self.columns[self.index])

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]

    @property
    def names(self) -> list[str]:
        return list(self.columns)

    def header(self, name: str) -> str:
        u = self.units.get(name, "")
        return f"{name} [{u}]" if u else name

    # ---------------------------------------------------------------- CSV

    def to_csv(self) -> str:
        buf = io.StringIO()
        for key in sorted(self.metadata):
            buf.write(f"# {key}: {json.dumps(self.metadata[key], sort_keys=True)}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([self.header(n) for n in self.names] + ["diagnostics"])
        for i in range(len(self)):
            row = ["" if math.isnan(self.columns[n][i]) else repr(float(self.columns[n][i]))
                   for n in self.names]
            w.writerow(row + [self.diagnostics[i]])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "Dataset":
        meta: dict[str, Any] = {}
        lines = text.splitlines()
        body = []
        for line in lines:
            if line.startswith("# "):
                key, _, val = line[2:].partition(": ")
                meta[key] = json.loads(val)
            else:
                body.append(line)
        rows = list(csv.reader(body))
        names, units = [], {}
        for h in rows[0][:-1]:
            if h.endswith("]") and " [" in h:
                n, _, u = h[:-1].partition(" [")
                units[n] = u
            else:
                n = h
            names.append(n)
        cols = {n: [float(r[j]) if r[j] else math.nan for r in rows[1:]] for j, n in enumerate(names)}
        diag = [r[-1] for r in rows[1:]]
        return cls(meta.get("kind", ""), names[0], cols, units, meta, diag)

    # ---------------------------------------------------------------- JSON

    def to_json(self) -> str:
        doc = {
            "metadata": self.metadata,
            "index": self.index,
            "units": self.units,
            "columns": {n: [_jsonable(v) for v in self.columns[n]] for n in self.names},
            "diagnostics": self.diagnostics,
        }
        return json.dumps(doc, indent=2, sort_keys=False)

    @classmethod
    def from_json(cls, text: str) -> "Dataset":
        doc = json.loads(text)
        cols = {n: [math.nan if v is None else v for v in vals] for n, vals in doc["columns"].items()}
        meta = doc.get("metadata", {})
        return cls(meta.get("kind", ""), doc["index"], cols, doc.get("units", {}), meta,
                   doc.get("diagnostics", []))

    def dumps(self, fmt: str = "csv") -> str:
        if fmt == "csv":
            return self.to_csv()
        if fmt == "json":
            return self.to_json()
        raise ValueError(f"unknown format {fmt!r}")
