"""Pole structure of the frequency double integral, in reduced units.

All lengths are measured in units of R and c = 1, so a wavenumber k becomes
x = k R, the observation time becomes tau = c T / R and the detuning becomes
x_A - x_B.  In these units the radiation kernel times k^3 is a short sum of
``coef * x**n * exp(i f x)`` pieces with f = +-1:

    x^3 alpha-part = x^2 sin(x)               = (x^2/2i) e^{ix} - (x^2/2i) e^{-ix}
    x^3 beta-part  = x cos(x) - sin(x)        = (x/2 - 1/2i) e^{ix} + (x/2 + 1/2i) e^{-ix}

A :class:`Piece` is one such term divided by simple linear pole factors; a
:class:`Term2D` is a product of a k-piece and a k'-piece, optionally coupled
through 1/(k' - k).  Both the residue engine and the numerical quadrature
consume these objects, so they agree on *what* is integrated and differ only
in *how*.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Literal, NamedTuple

import numpy as np

TermId = Literal["AA", "BB-cos", "mixed-k", "mixed-k'"]
PrescriptionName = Literal["causal", "adiabatic", "stationary-pv", "pt1995"]
PRESCRIPTIONS: tuple[str, ...] = ("causal", "adiabatic", "stationary-pv", "pt1995")
CHANNELS = ("a", "b")  # alpha, beta parts of F


class Pole(NamedTuple):
    """Simple pole at ``loc``.

    side = 0: on the real axis, principal value (half residue).
    side = +1 / -1: displaced into the upper / lower half plane, either by the
    finite imaginary part of ``loc`` or infinitesimally when ``loc`` is real.
    """

    loc: complex
    side: int = 0


class Piece(NamedTuple):
    coef: complex
    power: int
    freq: float
    poles: tuple[Pole, ...] = ()


class Term2D(NamedTuple):
    """coef * k^a k'^b e^{i(f k + f' k')} / [prod(k - p) prod(k' - q) (k' - k)^coupled]."""

    coef: complex
    power_k: int
    power_kp: int
    freq_k: float
    freq_kp: float
    poles_k: tuple[Pole, ...]
    poles_kp: tuple[Pole, ...]
    coupled: bool


def swap(term: Term2D) -> Term2D:
    """Relabel k <-> k'; 1/(k'-k) flips sign."""
    sign = -1.0 if term.coupled else 1.0
    return Term2D(term.coef * sign, term.power_kp, term.power_k, term.freq_kp, term.freq_k,
                  term.poles_kp, term.poles_k, term.coupled)


def kernel_pieces(channel: str, R: float = 1.0) -> list[Piece]:
    """k^3 times the alpha ('a') or beta ('b') part of F(kR), as exponential pieces."""
    if channel == "a":
        c = 1.0 / (2j * R)
        return [Piece(c, 2, R), Piece(-c, 2, -R)]
    if channel == "b":
        c1, c0 = 0.5 / R**2, 1.0 / (2j * R**3)
        return [Piece(c1, 1, R), Piece(-c0, 0, R), Piece(c1, 1, -R), Piece(c0, 0, -R)]
    raise ValueError(f"unknown channel {channel!r}")


def evaluate_pieces(pieces, k) -> np.ndarray:
    """Direct evaluation of a piece sum at points k (any complex array)."""
    k = np.asarray(k, dtype=complex)
    out = np.zeros_like(k)
    for p in pieces:
        val = p.coef * k**p.power * np.exp(1j * p.freq * k)
        for pole in p.poles:
            val = val / (k - pole.loc)
        out += val
    return out


@dataclass(frozen=True)
class PoleSpec:
    """One rational term of the pole structure, in reduced units.

    ``weight`` multiplies the whole term.  The time factor is
    cos[(k - x_ref) tau] on k ("k") or on k' ("k'"), or absent.
    """

    term_id: str
    poles_k: tuple[Pole, ...]
    poles_k1: tuple[Pole, ...]
    time_factor: Literal["none", "k", "k'"]
    coupling: Literal["separable", "coupled"]
    weight: float
    tau: float = 0.0
    x_ref: float = 0.0

    def __post_init__(self):
        coupled = self.term_id in ("mixed-k", "mixed-k'")
        if coupled != (self.coupling == "coupled"):
            raise ValueError(f"{self.term_id} must be {'coupled' if coupled else 'separable'}")

    def terms(self, X: str, Y: str, scale: complex = 1.0) -> Iterator[Term2D]:
        """Expand into Term2D pieces for tensor channels X (on k) and Y (on k')."""
        if self.time_factor == "none":
            phases = [(1.0, 0.0, 0.0)]
        else:
            phases = [(0.5 * np.exp(-1j * s * self.x_ref * self.tau), s * self.tau, 0.0) for s in (1, -1)]
            if self.time_factor == "k'":
                phases = [(c, 0.0, f) for c, f, _ in phases]
        w = scale * self.weight
        for pk in kernel_pieces(X):
            for pq in kernel_pieces(Y):
                for c, fk, fq in phases:
                    yield Term2D(w * pk.coef * pq.coef * c, pk.power, pq.power, pk.freq + fk,
                                 pq.freq + fq, self.poles_k, self.poles_k1, self.coupling == "coupled")


def pole_specs(prescription: str, xA: float, xB: float, tau: float = 0.0, eta: float = 0.0) -> list[PoleSpec]:
    """The rational terms a prescription keeps (reduced units, eta = eta_phys R / c)."""
    d = xA - xB
    if prescription == "causal":
        pa, pb = Pole(xA, 0), Pole(xB, 0)
        return [
            PoleSpec("AA", (pa,), (pa,), "none", "separable", 1.0 / d),
            PoleSpec("BB-cos", (pb,), (pb,), "none", "separable", -math.cos(d * tau) / d),
            PoleSpec("mixed-k", (pa, pb), (), "k", "coupled", -1.0, tau, xA),
            PoleSpec("mixed-k'", (), (pa, pb), "k'", "coupled", 1.0, tau, xA),
        ]
    if prescription == "adiabatic":
        pk = pk1 = Pole(complex(xA, -eta), -1)
    elif prescription == "stationary-pv":
        pk = pk1 = Pole(xA, 0)
    elif prescription == "pt1995":
        pk, pk1 = Pole(complex(xA, eta), 1), Pole(complex(xA, -eta), -1)
    else:
        raise ValueError(f"unknown prescription {prescription!r}")
    return [PoleSpec("AA", (pk,), (pk1,), "none", "separable", 1.0 / d)]


def channel_weights(s_bb: float, s_ab: float, s_aa: float) -> dict[tuple[str, str], float]:
    return {("a", "a"): s_aa, ("a", "b"): s_ab, ("b", "a"): s_ab, ("b", "b"): s_bb}


def reduced(system, T: float | None, line: int = 0) -> tuple[float, float, float]:
    """(x_A, x_B, tau) for one B line of a system."""
    from .atoms import C_LIGHT

    R = system.R
    tau = 0.0 if T is None else C_LIGHT * T / R
    return system.atom_A.k * R, system.lines_B[line].k * R, tau
