"""Closed-form interaction energy of the excited atom A.

Per B line, with x = k R and U = |mu_A|^2 |mu_B|^2 / [(4 pi eps0)^2 hbar Delta],

    W R^6 / U = G(x_A, 0) - G(x_B, Delta T),
    G(x, phi) = [s_bb - x^2 (s_bb + 2 s_ab) + x^4 s_aa] cos(2x + phi)
                + 2x [s_bb - x^2 s_ab] sin(2x + phi),

for T > 2R/c and exactly zero before.  The s_* are the unit dipole
contractions from :mod:`resvdw.geometry`.  Lines of B add up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .atoms import C_LIGHT, HBAR, PairSystem
from .errors import FarFieldDomain, MultiLine

FAR_FIELD_THRESHOLD = 10.0


@dataclass(frozen=True)
class EnergyResult:
    value: float  # J
    value_scaled: float  # W R^6 / U0
    method: str
    error_scale: float
    R: float
    T: float | None = None
    components: dict[str, Any] = field(default_factory=dict)

    @property
    def value_freq(self) -> float:
        """Energy as an angular frequency, rad/s."""
        return self.value / HBAR

    def to_dict(self, joules: bool = True) -> dict[str, Any]:
        out = {
            "method": self.method,
            "R_um": self.R / 1e-6,
            "T_ps": None if self.T is None else self.T / 1e-12,
            "value_rad_per_s": self.value_freq,
            "value_scaled": self.value_scaled,
            "error_scale": self.error_scale,
        }
        if joules:
            out["value_J"] = self.value
        if self.components:
            out["components"] = self.components
        return out


def make_result(system: PairSystem, value: float, method: str, T: float | None = None,
                **components) -> EnergyResult:
    R = system.R
    return EnergyResult(float(value), float(value) * R**6 / system.U0, method,
                        system.error_scale, R, T, dict(components))


def group(x, phase, s_bb, s_ab, s_aa):
    """G(x, phase); broadcasts over arrays."""
    x2 = x * x
    arg = 2.0 * x + phase
    return ((s_bb - x2 * (s_bb + 2.0 * s_ab) + x2 * x2 * s_aa) * np.cos(arg)
            + 2.0 * x * (s_bb - x2 * s_ab) * np.sin(arg))


def _unit_contractions(system: PairSystem, line: int):
    c = system.contractions(line)
    return c.unit_bb, c.unit_ab, c.unit_aa


def line_values(system: PairSystem, R, T, part: str = "full") -> np.ndarray:
    """Per-line energies in joules, shape (n_lines, *broadcast(R, T)).

    ``part`` is "full" (causally gated), "adiabatic" (time-independent group)
    or "far-field" (k^4/R^2 terms only, causally gated).
    """
    R = np.asarray(R, dtype=float)
    T = np.asarray(T, dtype=float)
    R, T = np.broadcast_arrays(R, T)
    kA = system.atom_A.k
    out = np.zeros((len(system.lines_B),) + R.shape)
    causal = T > 2.0 * R / C_LIGHT
    for i, (b, delta) in enumerate(zip(system.lines_B, system.detunings)):
        s_bb, s_ab, s_aa = _unit_contractions(system, i)
        U = system.prefactor(i)
        xA, xB = kA * R, b.k * R
        if part == "adiabatic":
            val = group(xA, 0.0, s_bb, s_ab, s_aa)
        elif part == "full":
            val = np.where(causal, group(xA, 0.0, s_bb, s_ab, s_aa)
                           - group(xB, delta * T, s_bb, s_ab, s_aa), 0.0)
        elif part == "far-field":
            val = np.where(causal, s_aa * (xA**4 * np.cos(2 * xA) - xB**4 * np.cos(2 * xB + delta * T)), 0.0)
        else:
            raise ValueError(f"unknown part {part!r}")
        out[i] = U * val / R**6
    return out


def energy_full(system: PairSystem, T: float) -> EnergyResult:
    """Full closed-form energy at observation time T (s); zero for T <= 2R/c."""
    per_line = line_values(system, system.R, T, "full")
    return make_result(system, float(per_line.sum()), "closed-form", T,
                       per_line=[float(v) for v in per_line])


def energy_adiabatic(system: PairSystem) -> EnergyResult:
    """Time-independent part (the +cos 2k_A R / +sin 2k_A R group)."""
    per_line = line_values(system, system.R, 0.0, "adiabatic")
    return make_result(system, float(per_line.sum()), "adiabatic", None,
                       per_line=[float(v) for v in per_line])


def check_far_field(system: PairSystem, R: float | None = None, threshold: float = FAR_FIELD_THRESHOLD):
    R = system.R if R is None else R
    kmin = min([system.atom_A.k] + [b.k for b in system.lines_B])
    if kmin * R < threshold:
        raise FarFieldDomain(f"k R = {kmin * R:.4g} below far-field threshold {threshold:g}")


def energy_far_field(system: PairSystem, T: float, threshold: float = FAR_FIELD_THRESHOLD) -> EnergyResult:
    """Far-field form, two-cosine expression plus the factorized product form.

    The factorized form replaces k_B^4 by k_A^4; it is reported in
    ``components["factorized"]`` and differs from ``value`` at O(Delta/omega).
    """
    check_far_field(system, threshold=threshold)
    R = system.R
    per_line = line_values(system, R, T, "far-field")
    kA = system.atom_A.k
    fact = 0.0
    if T > 2.0 * R / C_LIGHT:
        for i, (b, delta) in enumerate(zip(system.lines_B, system.detunings)):
            s_aa = system.contractions(i).unit_aa
            fact += (-2.0 * system.prefactor(i) / R**2 * s_aa * kA**4
                     * math.sin(delta * (R / C_LIGHT - T / 2.0))
                     * math.sin(kA * (R + C_LIGHT * T / 2.0) + b.k * (R - C_LIGHT * T / 2.0)))
    return make_result(system, float(per_line.sum()), "far-field", T,
                       per_line=[float(v) for v in per_line], factorized=fact,
                       factorized_scaled=fact * R**6 / system.U0)


def excitation_probability(system: PairSystem, T) -> np.ndarray | float:
    """sin^2[Delta (R/c - T) / 2] for T > R/c, else 0 (unit amplitude)."""
    if len(system.lines_B) != 1:
        raise MultiLine("excitation probability is defined per B line")
    delta = system.detunings[0]
    t = np.asarray(T, dtype=float)
    R = system.R
    p = np.where(t > R / C_LIGHT, np.sin(delta * (R / C_LIGHT - t) / 2.0) ** 2, 0.0)
    return float(p) if p.ndim == 0 else p
