"""Atomic lines, the two-atom system, regime checks and the JSON config format.

Internal units are SI.  Config files use spectroscopic units:

.. code-block:: json

    {
      "atoms": {
        "A": {"nu_tilde_cm": 12578.95, "mu_debye": 1.0, "gamma_hz": 0.0, "dir": "isotropic"},
        "B": {"lines": [{"nu_tilde_cm": 12985.17, "mu_debye": 1.0}]}
      },
      "geometry": {"R_um": 30.0, "direction": [0, 0, 1]}
    }

``gamma_hz`` is the linewidth as an ordinary frequency (Gamma / 2 pi).
``dir`` is a 3-vector or ``"isotropic"`` (the default when omitted).
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from typing import Any, Sequence

import numpy as np
from scipy import constants as sc

from .errors import ConfigError, DegenerateSystem
from .geometry import DipoleContractions, SeparationGeometry, contract, make_tensors

C_LIGHT = sc.c
HBAR = sc.hbar
EPS0 = sc.epsilon_0
DEBYE = 1e-21 / sc.c  # C m
COULOMB_SQ = (4.0 * math.pi * EPS0) ** 2

#: "much smaller than" in the quasi-resonant condition.
MUCH_LESS_RATIO = 0.1


@dataclass(frozen=True)
class TransitionLine:
    """One two-level transition, stored in spectroscopic units.

    nu_tilde_cm: wavenumber in cm^-1.
    mu_debye: dipole matrix element magnitude in debye.
    direction: unit dipole direction, or None for orientation averaging.
    gamma_hz: linewidth Gamma / 2 pi in Hz.
    """

    nu_tilde_cm: float
    mu_debye: float = 1.0
    direction: tuple[float, float, float] | None = None
    gamma_hz: float = 0.0

    def __post_init__(self):
        for name in ("nu_tilde_cm", "mu_debye"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigError(f"must be a positive number, got {v!r}", name)
        if not (math.isfinite(self.gamma_hz) and self.gamma_hz >= 0):
            raise ConfigError(f"must be >= 0, got {self.gamma_hz!r}", "gamma_hz")
        if self.direction is not None:
            d = np.asarray(self.direction, dtype=float)
            n = np.linalg.norm(d) if d.shape == (3,) else 0.0
            if not (n > 0 and np.isfinite(n)):
                raise ConfigError(f"direction must be a nonzero 3-vector, got {self.direction!r}", "dir")
            if abs(n - 1.0) > 1e-14:
                d = d / n
            object.__setattr__(self, "direction", tuple(float(c) for c in d))

    @property
    def k(self) -> float:
        """Angular wavenumber in 1/m."""
        return 2.0 * math.pi * self.nu_tilde_cm * 100.0

    @property
    def omega(self) -> float:
        return C_LIGHT * self.k

    @property
    def mu(self) -> float:
        """Dipole magnitude in C m."""
        return self.mu_debye * DEBYE

    @property
    def gamma(self) -> float:
        """Linewidth in rad/s."""
        return 2.0 * math.pi * self.gamma_hz


@dataclass(frozen=True)
class PairSystem:
    """Excited atom A, ground-state atom B (one or more lines), and their separation."""

    atom_A: TransitionLine
    lines_B: tuple[TransitionLine, ...]
    geom: SeparationGeometry
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "lines_B", tuple(self.lines_B))
        if not self.lines_B:
            raise ConfigError("atom B needs at least one line", "atoms.B.lines")
        for i, line in enumerate(self.lines_B):
            if line.nu_tilde_cm == self.atom_A.nu_tilde_cm:
                raise DegenerateSystem(f"B line {i} is resonant with A (zero detuning)")

    @property
    def R(self) -> float:
        return self.geom.R

    @property
    def detunings(self) -> list[float]:
        """Delta_AB = omega_A - omega_B per B line, rad/s."""
        return [self.atom_A.omega - b.omega for b in self.lines_B]

    @property
    def mean_detuning(self) -> float:
        """omega_A minus the mean B-line frequency."""
        return self.atom_A.omega - float(np.mean([b.omega for b in self.lines_B]))

    def contractions(self, line: int = 0) -> DipoleContractions:
        b = self.lines_B[line]
        return contract(make_tensors(self.geom), self.atom_A.mu, b.mu, self.atom_A.direction, b.direction)

    def prefactor(self, line: int = 0) -> float:
        """|mu_A|^2 |mu_B|^2 / [(4 pi eps0)^2 hbar Delta] for one line (signed, J m^6)."""
        b = self.lines_B[line]
        return self.atom_A.mu**2 * b.mu**2 / (COULOMB_SQ * HBAR * self.detunings[line])

    @property
    def U0(self) -> float:
        """Positive energy scale used for ``value_scaled`` (J m^6).

        Uses line 0's dipole and |mean detuning|; for a single line this is
        |mu_A|^2 |mu_B|^2 / [(4 pi eps0)^2 hbar |Delta|].
        """
        b = self.lines_B[0]
        return self.atom_A.mu**2 * b.mu**2 / (COULOMB_SQ * HBAR * abs(self.mean_detuning))

    @property
    def error_scale(self) -> float:
        """Largest |Delta|/omega: relative size of the neglected terms."""
        return max(abs(d) / min(self.atom_A.omega, b.omega) for d, b in zip(self.detunings, self.lines_B))

    def at(self, R: float) -> "PairSystem":
        """Same system at separation R (metres) along the same direction."""
        return replace(self, geom=self.geom.with_distance(R))

    def hash(self) -> str:
        return hashlib.sha256(dump_system(self).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class RegimeReport:
    quasi_resonant: list[bool]
    linewidth_ok: bool
    observation_window: float
    detuning_over_omega: list[float]
    gamma_over_detuning: list[float]
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "quasi_resonant": self.quasi_resonant,
            "quasi_resonant_all": all(self.quasi_resonant),
            "linewidth_ok": self.linewidth_ok,
            "observation_window_s": None if math.isinf(self.observation_window) else self.observation_window,
            "detuning_over_omega": self.detuning_over_omega,
            "gamma_over_detuning": self.gamma_over_detuning,
            "notes": self.notes,
        }


def validate_regime(system: PairSystem, ratio: float = MUCH_LESS_RATIO) -> RegimeReport:
    """Flag (never reject) the quasi-resonant condition Gamma < |Delta| << omega."""
    gA = system.atom_A.gamma
    qr, lw, d_over_w, g_over_d, notes = [], [], [], [], []
    for i, (d, b) in enumerate(zip(system.detunings, system.lines_B)):
        ad = abs(d)
        r = ad / min(system.atom_A.omega, b.omega)
        ok_lw = ad > 0.5 * (gA + b.gamma)
        q = gA < ad and b.gamma < ad and r < ratio
        d_over_w.append(r)
        g_over_d.append(max(gA, b.gamma) / ad)
        lw.append(ok_lw)
        qr.append(q)
        if not q:
            notes.append(f"line {i}: outside quasi-resonant regime (|D|/w={r:.3g})")
    window = 2.0 * math.pi / gA if gA > 0 else math.inf
    return RegimeReport(qr, all(lw), window, d_over_w, g_over_d, notes)


# --------------------------------------------------------------------- config

def _num(obj: dict, key: str, path: str, default: float | None = None) -> float:
    if key not in obj:
        if default is None:
            raise ConfigError("missing required value", f"{path}.{key}")
        return default
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"expected a number, got {v!r}", f"{path}.{key}")
    return float(v)


def _direction(obj: dict, key: str, path: str):
    v = obj.get(key, "isotropic")
    if v is None or v == "isotropic":
        return None
    if isinstance(v, list) and len(v) == 3 and all(isinstance(c, (int, float)) for c in v):
        return tuple(float(c) for c in v)
    raise ConfigError(f"expected a 3-vector or 'isotropic', got {v!r}", f"{path}.{key}")


def _line(obj: Any, path: str) -> TransitionLine:
    if not isinstance(obj, dict):
        raise ConfigError("expected an object", path)
    nu = _num(obj, "nu_tilde_cm", path)
    mu = _num(obj, "mu_debye", path, 1.0)
    gam = _num(obj, "gamma_hz", path, 0.0)
    for name, val in (("nu_tilde_cm", nu), ("mu_debye", mu)):
        if val <= 0:
            raise ConfigError("must be positive", f"{path}.{name}")
    if gam < 0:
        raise ConfigError("must be >= 0", f"{path}.gamma_hz")
    return TransitionLine(nu, mu, _direction(obj, "dir", path), gam)


def parse_system(data: dict) -> PairSystem:
    if not isinstance(data, dict):
        raise ConfigError("top level must be an object")
    atoms = data.get("atoms")
    if not isinstance(atoms, dict) or "A" not in atoms or "B" not in atoms:
        raise ConfigError("need atoms.A and atoms.B", "atoms")
    a = _line(atoms["A"], "atoms.A")
    b = atoms["B"]
    if not isinstance(b, dict) or not isinstance(b.get("lines"), list) or not b["lines"]:
        raise ConfigError("need a nonempty list", "atoms.B.lines")
    lines = tuple(_line(o, f"atoms.B.lines[{i}]") for i, o in enumerate(b["lines"]))
    geo = data.get("geometry", {})
    if not isinstance(geo, dict):
        raise ConfigError("expected an object", "geometry")
    R_um = _num(geo, "R_um", "geometry", 30.0)
    if R_um <= 0:
        raise ConfigError("must be positive", "geometry.R_um")
    direction = geo.get("direction", [0.0, 0.0, 1.0])
    if not (isinstance(direction, list) and len(direction) == 3) or not any(direction):
        raise ConfigError(f"expected a nonzero 3-vector, got {direction!r}", "geometry.direction")
    if not all(isinstance(c, (int, float)) for c in direction):
        raise ConfigError(f"expected numbers, got {direction!r}", "geometry.direction")
    geom = SeparationGeometry(R_um * 1e-6, tuple(direction))
    return PairSystem(a, lines, geom, str(data.get("label", "")))


def load_system(config_text: str) -> PairSystem:
    """Parse JSON config text into a :class:`PairSystem`."""
    try:
        data = json.loads(config_text)
    except json.JSONDecodeError as exc:
        raise ConfigError(exc.msg, line=exc.lineno) from None
    return parse_system(data)


def _line_dict(line: TransitionLine) -> dict:
    return {
        "nu_tilde_cm": line.nu_tilde_cm,
        "mu_debye": line.mu_debye,
        "gamma_hz": line.gamma_hz,
        "dir": "isotropic" if line.direction is None else list(line.direction),
    }


def system_to_dict(system: PairSystem) -> dict:
    out = {
        "atoms": {
            "A": _line_dict(system.atom_A),
            "B": {"lines": [_line_dict(b) for b in system.lines_B]},
        },
        "geometry": {"R_um": system.R / 1e-6, "direction": list(system.geom.direction)},
    }
    if system.label:
        out["label"] = system.label
    return out


def dump_system(system: PairSystem) -> str:
    return json.dumps(system_to_dict(system), indent=2, sort_keys=True)


def fig3_system() -> PairSystem:
    """The packaged Rb(5P1/2) / K(D1, D2) system with placeholder 1 D dipoles."""
    from importlib.resources import files

    return load_system(files("resvdw.data").joinpath("fig3_rb_k.json").read_text())
