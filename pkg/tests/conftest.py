from __future__ import annotations

import math

import numpy as np
import pytest

from resvdw.atoms import C_LIGHT, PairSystem, TransitionLine
from resvdw.geometry import SeparationGeometry


def make_system(nu_A: float = 12578.95, nu_B=(12985.17,), R: float = 30e-6, mu_A: float = 1.0,
                mu_B: float = 1.0, dir_A=None, dir_B=None, direction=(0.0, 0.0, 1.0)) -> PairSystem:
    lines = tuple(TransitionLine(n, mu_B, dir_B) for n in np.atleast_1d(nu_B))
    return PairSystem(TransitionLine(nu_A, mu_A, dir_A), lines, SeparationGeometry(R, direction))


def random_direction(rng: np.random.Generator):
    v = rng.normal(size=3)
    return tuple(v / np.linalg.norm(v))


def random_point(rng: np.random.Generator, xmin: float = 0.5, xmax: float = 200.0, lines: int = 1,
                 orientation: str | None = None):
    """A random single- or multi-line system with k_A R in [xmin, xmax] and T past the front."""
    nu_A = rng.uniform(9000.0, 16000.0)
    nus = []
    for _ in range(lines):
        ratio = rng.choice([-1, 1]) * rng.uniform(0.005, 0.08)
        nus.append(nu_A * (1 + ratio))
    mode = orientation or rng.choice(["isotropic", "fixed", "partial"])
    dir_A = dir_B = None
    if mode == "fixed":
        dir_A, dir_B = random_direction(rng), random_direction(rng)
    elif mode == "partial":
        dir_A = random_direction(rng)
    kA = 2 * math.pi * nu_A * 100
    R = rng.uniform(xmin, xmax) / kA
    sys = make_system(nu_A, nus, R, rng.uniform(0.5, 3), rng.uniform(0.5, 3), dir_A, dir_B,
                      random_direction(rng))
    delta = min(abs(d) for d in sys.detunings)
    T = float(2 * R / C_LIGHT + rng.uniform(0.01, 50.0) / delta)
    return sys, T


@pytest.fixture
def rng():
    return np.random.default_rng(20261018)


@pytest.fixture
def single():
    """Rb-like A line and one K-like B line at 30 um, isotropic."""
    return make_system()


# ------------------------------------------------------------ acceptance report

ACCEPTANCE: dict[int, str] = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    """Remember one PASS/FAIL line; printed now and again in the terminal summary."""
    line = f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}"
    ACCEPTANCE[criterion] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
