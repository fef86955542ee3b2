"""Grid scans over R or T, beat-structure analysis and time averaging."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .atoms import C_LIGHT, HBAR, PairSystem
from .closed_form import FAR_FIELD_THRESHOLD, EnergyResult, line_values, make_result
from .dataset import Dataset
from .errors import InsufficientResolution, VdwError

METHODS = ("closed-form", "far-field", "adiabatic", "causal", "quadrature",
           "contour:adiabatic", "contour:stationary-pv", "contour:pt1995")
UNITS = {"rad/s": "rad/s", "J": "J", "scaled": "1"}
MIN_POINTS_PER_PERIOD = 8


def parse_range(text: str) -> tuple[float, float, int]:
    """'min:max:count' -> (min, max, count); a bare number is a one-point range."""
    parts = text.split(":")
    try:
        if len(parts) == 1:
            v = float(parts[0])
            return v, v, 1
        if len(parts) == 3:
            lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
            if n < 1 or (n > 1 and not hi > lo):
                raise ValueError
            return lo, hi, n
    except ValueError:
        pass
    raise ValueError(f"expected a number or min:max:count, got {text!r}")


def worker_count() -> int:
    """Parallel rows, capped by the VDW_THREADS environment variable."""
    cap = os.environ.get("VDW_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            pass
    return n


@dataclass(frozen=True)
class ScanSpec:
    """Linear grid in R (metres) or T (seconds) with the other variable fixed."""

    variable: Literal["R", "T"]
    start: float
    stop: float
    num: int
    fixed: float
    methods: tuple[str, ...] = ("closed-form",)
    per_line: bool = False
    units: str = "rad/s"
    name: str = "scan"

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(self.methods))
        if self.variable not in ("R", "T"):
            raise ValueError("variable must be 'R' or 'T'")
        if self.num < 1 or (self.num > 1 and not self.stop > self.start):
            raise ValueError("need num >= 1 and stop > start for a monotone grid")
        if self.variable == "R" and self.start <= 0:
            raise ValueError("R grid must be positive")
        if not self.methods:
            raise ValueError("at least one method")
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}; choose from {METHODS}")
        if self.units not in UNITS:
            raise ValueError(f"units must be one of {tuple(UNITS)}")

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.num)


def _row_value(system: PairSystem, R: float, T: float, method: str) -> EnergyResult:
    from .closed_form import energy_far_field
    from .contour import evaluate_causal, evaluate_prescription
    from .quadrature import energy_quadrature

    s = system.at(R)
    if method == "causal":
        return evaluate_causal(s, T)
    if method == "quadrature":
        return energy_quadrature(s, T)
    if method == "far-field":
        return energy_far_field(s, T)
    if method.startswith("contour:"):
        return evaluate_prescription(s, method.split(":", 1)[1], T)
    raise ValueError(method)


def _convert(vals: np.ndarray, R: np.ndarray, system: PairSystem, units: str) -> np.ndarray:
    if units == "rad/s":
        return vals / HBAR
    if units == "scaled":
        return vals * R**6 / system.U0
    return vals


def scan(system: PairSystem, spec: ScanSpec, timestamp: str | None = None) -> Dataset:
    """Evaluate every method on the grid; failing rows become NaN with a diagnostic."""
    grid = spec.grid
    if spec.variable == "R":
        R, T = grid, np.full_like(grid, spec.fixed)
    else:
        R, T = np.full_like(grid, spec.fixed), grid
    n_lines = len(system.lines_B)
    diags: list[list[str]] = [[] for _ in grid]
    cols: dict[str, np.ndarray] = {}
    for method in spec.methods:
        per = np.full((n_lines, grid.size), np.nan)
        if method in ("closed-form", "adiabatic"):
            per = line_values(system, R, T, "full" if method == "closed-form" else "adiabatic")
        elif method == "far-field":
            kmin = min([system.atom_A.k] + [b.k for b in system.lines_B])
            ok = kmin * R >= FAR_FIELD_THRESHOLD
            per[:, ok] = line_values(system, R[ok], T[ok], "far-field")
            for i in np.flatnonzero(~ok):
                diags[i].append(f"far-field: k R = {kmin * R[i]:.4g} below threshold {FAR_FIELD_THRESHOLD:g}")
        else:
            def row(i: int, method=method):
                try:
                    res = _row_value(system, float(R[i]), float(T[i]), method)
                    return i, res.components.get("per_line", [res.value]), None
                except VdwError as exc:
                    return i, None, f"{method}: {type(exc).__name__}: {exc}"

            with ThreadPoolExecutor(max_workers=worker_count()) as pool:
                for i, vals, msg in pool.map(row, range(grid.size)):
                    if msg:
                        diags[i].append(msg)
                    else:
                        per[:, i] = vals
        per = _convert(per, R, system, spec.units)
        cols[method] = per.sum(axis=0)
        if spec.per_line:
            for j in range(n_lines):
                cols[f"{method}[line{j}]"] = per[j]
    index = "R_um" if spec.variable == "R" else "T_ps"
    scale = 1e-6 if spec.variable == "R" else 1e-12
    columns = {index: np.round(grid / scale, 10)} | cols
    units = {index: "um" if spec.variable == "R" else "ps"} | {c: UNITS[spec.units] for c in cols}
    fixed_key = "T_ps" if spec.variable == "R" else "R_um"
    fixed_val = spec.fixed / (1e-12 if spec.variable == "R" else 1e-6)
    params = {fixed_key: fixed_val, "methods": list(spec.methods), "name": spec.name}
    return Dataset.build("scan", index, columns, units, system, params,
                         ["; ".join(d) for d in diags], timestamp)


# ------------------------------------------------------------------ beats

@dataclass(frozen=True)
class BeatResult:
    short_period: float  # m
    long_period: float  # m
    peaks: tuple[float, float]  # angular spatial frequencies, rad/m
    points_per_short_period: float
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "short_period_um": float(self.short_period / 1e-6),
            "long_period_um": float(self.long_period / 1e-6),
            "peaks_rad_per_um": [float(p * 1e-6) for p in self.peaks],
            "points_per_short_period": float(self.points_per_short_period),
            "notes": self.notes,
        }


def _peak_refine(power: np.ndarray, i: int) -> float:
    """Quadratic (log-power) interpolation of a spectral peak index."""
    if i <= 0 or i >= power.size - 1:
        return float(i)
    a, b, c = np.log(power[i - 1:i + 2] + 1e-300)
    den = a - 2 * b + c
    return i + (0.5 * (a - c) / den if den != 0 else 0.0)


def beat_analysis(ds: Dataset, column: str, compensate: bool = True, pad: int = 8) -> BeatResult:
    """Carrier and envelope periods of an R-scan column.

    The two strongest spectral components sit near 2 k_A and 2 k_B; the
    carrier period is 2 pi over their mean half-sum and the envelope node
    spacing is 2 pi over their difference.  With ``compensate`` the column
    is multiplied by R^2 first, which flattens the far-field amplitude decay.
    """
    if ds.index != "R_um":
        raise ValueError("beat analysis needs an R-scan")
    R = ds[ds.index] * 1e-6
    y = np.array(ds[column], dtype=float)
    if R.size < 16 or np.any(~np.isfinite(y)):
        raise InsufficientResolution("need at least 16 finite samples")
    dR = float(np.mean(np.diff(R)))
    if compensate:
        y = y * R**2
    y = (y - y.mean()) * np.hanning(y.size)
    nfft = 1 << int(math.ceil(math.log2(y.size * pad)))
    power = np.abs(np.fft.rfft(y, nfft)) ** 2
    kappa = 2 * math.pi * np.fft.rfftfreq(nfft, dR)
    bin_k = kappa[1]
    lobe = int(math.ceil(4 * math.pi / (R[-1] - R[0]) / bin_k))  # Hann main lobe half-width
    work = power.copy()
    work[: lobe + 1] = 0.0  # residual trend
    i1 = int(np.argmax(work))
    k1 = _peak_refine(power, i1) * bin_k
    lo, hi = max(0, i1 - lobe), min(work.size, i1 + lobe + 1)
    work[lo:hi] = 0.0
    i2 = int(np.argmax(work))
    notes = []
    if work[i2] < 1e-6 * power[i1]:
        raise InsufficientResolution("second spectral component not resolved")
    # the second cluster may hold several close lines: use its amplitude centroid
    thresh = 0.25 * work[i2]
    a = i2
    while a > 0 and work[a - 1] > thresh:
        a -= 1
    b = i2
    while b < work.size - 1 and work[b + 1] > thresh:
        b += 1
    if b > a + 2 * lobe:
        notes.append("second spectral cluster is broad; using its amplitude centroid")
    if b > a + 2:
        amp = np.sqrt(work[a:b + 1])
        k2 = float(np.sum(np.arange(a, b + 1) * amp) / np.sum(amp)) * bin_k
    else:
        k2 = _peak_refine(power, i2) * bin_k
    short = 2 * math.pi / (0.5 * (k1 + k2))
    pts = short / dR
    if pts < MIN_POINTS_PER_PERIOD:
        raise InsufficientResolution(f"{pts:.3g} points per short period; need {MIN_POINTS_PER_PERIOD}")
    if abs(k1 - k2) < 2 * lobe * bin_k:
        raise InsufficientResolution("carrier components closer than the spectral resolution")
    return BeatResult(float(short), float(2 * math.pi / abs(k1 - k2)), (float(k1), float(k2)), float(pts), notes)


# ------------------------------------------------------------ time average

def time_average(system: PairSystem, window: float, start: float | None = None, method: str = "closed-form",
                 nodes_per_period: int = 16) -> EnergyResult:
    """Uniform mean of the energy over [start, start + window] (seconds).

    ``start`` defaults to the causality front 2R/c.  The integral uses
    Gauss-Legendre panels of one detuning period each.
    """
    R = system.R
    t0 = 2.0 * R / C_LIGHT if start is None else start
    if window <= 0:
        raise ValueError("window must be positive")
    period = 2 * math.pi / max(abs(d) for d in system.detunings)
    n_panels = max(1, int(math.ceil(window / period)))
    x, w = np.polynomial.legendre.leggauss(nodes_per_period)
    edges = np.linspace(t0, t0 + window, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    t = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wt = (half[:, None] * w[None, :]).ravel()
    f = _time_series(system, t, method)
    mean = float(np.dot(wt, f) / window)
    periods = window / (2 * math.pi / abs(system.mean_detuning))
    return make_result(system, mean, f"time-average:{method}", t0 + window,
                       window=window, start=t0, periods=periods)


def _time_series(system: PairSystem, t: np.ndarray, method: str) -> np.ndarray:
    if method == "closed-form":
        return line_values(system, system.R, t, "full").sum(axis=0)
    if method == "causal":
        from .contour import evaluate_causal

        return np.array([evaluate_causal(system, float(ti)).value for ti in t])
    raise ValueError(f"time_average supports 'closed-form' and 'causal', not {method!r}")


def spectral_concentration(y: np.ndarray, dt: float, omega: float, half_width: int = 3) -> float:
    """Fraction of (Hann-windowed) spectral power within a few bins of angular frequency omega."""
    y = (np.asarray(y) - np.mean(y)) * np.hanning(len(y))
    power = np.abs(np.fft.rfft(y)) ** 2
    freqs = 2 * math.pi * np.fft.rfftfreq(len(y), dt)
    i = int(np.argmin(np.abs(freqs - omega)))
    return float(power[max(0, i - half_width):i + half_width + 1].sum() / power.sum())


def first_maximum(x: np.ndarray, y: np.ndarray) -> float:
    """Abscissa of the first local maximum of |y| after it leaves zero."""
    a = np.abs(np.asarray(y))
    nz = np.flatnonzero(a > 0)
    if nz.size == 0:
        raise ValueError("series is identically zero")
    for i in range(max(nz[0], 1), a.size - 1):
        if a[i] >= a[i - 1] and a[i] > a[i + 1]:
            return float(x[i])
    raise ValueError("no interior maximum")
