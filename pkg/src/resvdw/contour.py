"""Residue-calculus evaluation of the frequency double integral.

Each exponential piece e^{ikf} is closed in the upper half plane for f > 0 and
in the lower one for f < 0.  Real poles taken as principal values contribute
half residues (i pi sgn f), displaced poles contribute full residues when they
sit in the closing half plane.  Polynomial remainders integrate to zero in the
distributional sense.  With T > 2R/c every exponent that appears is nonzero,
which is what makes the closure unique.

Coupled 1/(k' - k) terms are integrated over k' first (the default) or over k
first; the integrand of the causal sum is symmetric, so both orders agree.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from .atoms import C_LIGHT, HBAR, PairSystem
from .closed_form import EnergyResult, make_result
from .dataset import Dataset
from .errors import CausalityError, ContourAmbiguity
from .poles import (
    PRESCRIPTIONS,
    Piece,
    Pole,
    PoleSpec,
    Term2D,
    channel_weights,
    pole_specs,
    reduced,
    swap,
)

ORDERS = ("kprime-first", "k-first")
TERM_IDS = ("AA", "BB-cos", "mixed-k", "mixed-k'")


def _sgn(f: float) -> int:
    return int(f > 0) - int(f < 0)


def _closure_weight(pole: Pole, f: float) -> complex:
    """Multiplier of the residue at ``pole`` for an e^{ikf} piece."""
    if f == 0:
        raise ContourAmbiguity("exponent vanishes; closing half-plane undetermined")
    if pole.side == 0:
        return 1j * math.pi * _sgn(f)
    if pole.side > 0:
        return 2j * math.pi if f > 0 else 0.0
    return -2j * math.pi if f < 0 else 0.0


def residue_integral(pieces: Iterable[Piece]) -> complex:
    """Integral over the real line of a sum of pieces, by residues."""
    total = 0j
    for p in pieces:
        if not p.poles:
            if p.freq == 0:
                raise ContourAmbiguity("pure polynomial with zero exponent")
            continue
        locs = [q.loc for q in p.poles]
        for j, pole in enumerate(p.poles):
            w = _closure_weight(pole, p.freq)
            if w == 0:
                continue
            den = 1.0
            for l, q in enumerate(locs):
                if l != j:
                    den *= pole.loc - q
            if den == 0:
                raise ContourAmbiguity("coincident poles are outside the kernel catalogue")
            total += w * p.coef * pole.loc**p.power * np.exp(1j * pole.loc * p.freq) / den
    return complex(total)


def inner_residues(term: Term2D) -> list[Piece]:
    """Integrate a Term2D over k' by residues; returns the k-integrand."""
    out = []
    qs = term.poles_kp
    f = term.freq_kp
    for j, q in enumerate(qs):
        w = _closure_weight(q, f)
        if w == 0:
            continue
        den = 1.0
        for l, r in enumerate(qs):
            if l != j:
                den *= q.loc - r.loc
        res = w * term.coef * q.loc**term.power_kp * np.exp(1j * q.loc * f) / den
        if term.coupled:
            # 1/(q - k) = -1/(k - q): q becomes a pole of the outer integrand
            out.append(Piece(-res, term.power_k, term.freq_k, term.poles_k + (q,)))
        else:
            out.append(Piece(res, term.power_k, term.freq_k, term.poles_k))
    if term.coupled:
        # pole at k' = k (k real, principal value)
        w = _closure_weight(Pole(0.0, 0), f)
        out.append(Piece(w * term.coef, term.power_k + term.power_kp, term.freq_k + f,
                         term.poles_k + qs))
    elif not qs and f == 0:
        raise ContourAmbiguity("pure polynomial with zero exponent")
    return out


def integrate_term(term: Term2D, order: str = "kprime-first") -> complex:
    if order not in ORDERS:
        raise ValueError(f"order must be one of {ORDERS}")
    if order == "k-first":
        term = swap(term)
    return residue_integral(inner_residues(term))


def spec_bracket(spec: PoleSpec, weights: dict, xA: float, xB: float, order: str = "kprime-first") -> complex:
    """Contribution of one PoleSpec to W R^6 / U (reduced units)."""
    scale = (xA - xB) / math.pi**2
    total = 0j
    for (X, Y), s in weights.items():
        if s == 0:
            continue
        for t in spec.terms(X, Y, scale * s):
            total += integrate_term(t, order)
    return total


def _line_weights(system: PairSystem, line: int) -> dict:
    c = system.contractions(line)
    return channel_weights(c.unit_bb, c.unit_ab, c.unit_aa)


def evaluate_term(system: PairSystem, T: float | None, spec: PoleSpec, prescription: str = "causal",
                  line: int = 0, order: str = "kprime-first") -> complex:
    """Energy contribution (J, complex) of one rational term for one B line."""
    if prescription not in PRESCRIPTIONS:
        raise ValueError(f"unknown prescription {prescription!r}")
    if prescription != "causal" and spec.term_id != "AA":
        raise ValueError(f"{prescription} keeps only the AA term")
    if spec.time_factor != "none" or spec.term_id == "BB-cos":
        if T is None or T <= 2.0 * system.R / C_LIGHT:
            raise CausalityError("time-dependent terms are closed using T > 2R/c")
    xA, xB, _ = reduced(system, T, line)
    val = spec_bracket(spec, _line_weights(system, line), xA, xB, order)
    return system.prefactor(line) / system.R**6 * val


def causal_bracket(system: PairSystem, T: float, line: int = 0, order: str = "kprime-first",
                   mask: Sequence[str] = ()) -> complex:
    xA, xB, tau = reduced(system, T, line)
    w = _line_weights(system, line)
    return sum((spec_bracket(s, w, xA, xB, order) for s in pole_specs("causal", xA, xB, tau)
                if s.term_id not in mask), 0j)


def evaluate_causal(system: PairSystem, T: float, order: str = "kprime-first",
                    mask: Sequence[str] = ()) -> EnergyResult:
    """All four terms under the causal prescription; exactly 0 for T <= 2R/c.

    ``mask`` drops term ids (debugging aid, e.g. ``("mixed-k", "mixed-k'")``).
    """
    for m in mask:
        if m not in TERM_IDS:
            raise ValueError(f"unknown term id {m!r}")
    R = system.R
    T = float(T)
    if T <= 2.0 * R / C_LIGHT:
        return make_result(system, 0.0, "contour:causal", T, per_line=[0.0] * len(system.lines_B))
    per_line, imag = [], 0.0
    for i in range(len(system.lines_B)):
        v = system.prefactor(i) / R**6 * causal_bracket(system, T, i, order, mask)
        per_line.append(v.real)
        imag += v.imag
    return make_result(system, sum(per_line), "contour:causal", T, per_line=per_line, imag=imag)


def evaluate_prescription(system: PairSystem, prescription: str, T: float | None = None,
                          eta: float = 0.0, order: str = "kprime-first") -> EnergyResult:
    """Energy under one of the four prescriptions.

    ``eta`` is the physical pole shift in rad/s (0 means the eta -> 0+ limit).
    The energy is the real part (the Hermitian-conjugate half of the sum);
    the imaginary remainder is kept in ``components["imag"]``.
    """
    if prescription == "causal":
        return evaluate_causal(system, T, order)
    R = system.R
    per_line, imag = [], 0.0
    for i in range(len(system.lines_B)):
        xA, xB, _ = reduced(system, None, i)
        (spec,) = pole_specs(prescription, xA, xB, eta=eta * R / C_LIGHT)
        v = evaluate_term(system, T, spec, prescription, i, order)
        per_line.append(v.real)
        imag += v.imag
    return make_result(system, sum(per_line), f"contour:{prescription}", T, per_line=per_line, imag=imag)


def far_field_asymptotics(system: PairSystem, T: float) -> dict[str, float]:
    """Leading k^4/R^2 forms of each prescription (J)."""
    R = system.R
    kA = system.atom_A.k
    out = dict.fromkeys(PRESCRIPTIONS, 0.0)
    for i, (b, delta) in enumerate(zip(system.lines_B, system.detunings)):
        base = system.prefactor(i) * system.contractions(i).unit_aa / R**2
        out["pt1995"] += base * kA**4
        out["stationary-pv"] += base * kA**4 * math.cos(kA * R) ** 2
        out["adiabatic"] += base * kA**4 * math.cos(2 * kA * R)
        if T > 2.0 * R / C_LIGHT:
            out["causal"] += base * (kA**4 * math.cos(2 * kA * R) - b.k**4 * math.cos(2 * b.k * R + delta * T))
    return out


def compare_prescriptions(system: PairSystem, T: float, R_grid: Sequence[float]) -> Dataset:
    """Per separation: the four prescriptions and their far-field forms (rad/s)."""
    R_grid = np.asarray(R_grid, dtype=float)
    if R_grid.size == 0:
        raise ValueError("empty R grid")
    cols: dict[str, list[float]] = {"R_um": []}
    names = list(PRESCRIPTIONS) + [f"far-field:{p}" for p in PRESCRIPTIONS]
    for n in names:
        cols[n] = []
    for R in R_grid:
        s = system.at(float(R))
        cols["R_um"].append(R / 1e-6)
        for p in PRESCRIPTIONS:
            cols[p].append(evaluate_prescription(s, p, T).value / HBAR)
        ff = far_field_asymptotics(s, T)
        for p in PRESCRIPTIONS:
            cols[f"far-field:{p}"].append(ff[p] / HBAR)
    units = {"R_um": "um"} | {n: "rad/s" for n in names}
    return Dataset.build("compare", "R_um", cols, units, system, {"T_ps": T / 1e-12})
