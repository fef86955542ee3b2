"""Separation geometry, transverse/static tensors and dipole contractions.

The two geometric tensors are

    alpha_ij = delta_ij - Rhat_i Rhat_j      (transverse projector)
    beta_ij  = delta_ij - 3 Rhat_i Rhat_j    (static dipole tensor)

and the angular-integrated transverse propagator is

    F_ij(x) = alpha_ij sin(x)/x + beta_ij [cos(x)/x**2 - sin(x)/x**3],  x = k R.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .errors import DegenerateGeometry, Singularity

ContractionMode = Literal["fixed-orientation", "isotropic-average", "partial-average"]


def _normalize(v) -> tuple[float, float, float]:
    a = np.asarray(v, dtype=float)
    n = np.linalg.norm(a) if a.shape == (3,) else 0.0
    if not (n > 0 and np.isfinite(n)):
        raise DegenerateGeometry(f"direction must be a finite nonzero 3-vector, got {v!r}")
    if abs(n - 1.0) > 1e-14:
        a = a / n
    return tuple(float(c) for c in a)


@dataclass(frozen=True)
class SeparationGeometry:
    """Separation R_B - R_A stored as a distance (metres) and a unit direction."""

    R: float
    direction: tuple[float, float, float] = (0.0, 0.0, 1.0)

    def __post_init__(self):
        if not (np.isfinite(self.R) and self.R > 0):
            raise DegenerateGeometry(f"need a finite separation R > 0, got {self.R!r}")
        object.__setattr__(self, "R", float(self.R))
        object.__setattr__(self, "direction", _normalize(self.direction))

    @classmethod
    def from_vector(cls, R_vec: Sequence[float]) -> "SeparationGeometry":
        v = np.asarray(R_vec, dtype=float)
        if v.shape != (3,) or not np.all(np.isfinite(v)) or not np.any(v):
            raise DegenerateGeometry(f"zero or invalid separation vector {R_vec!r}")
        return cls(float(np.linalg.norm(v)), tuple(v))

    @classmethod
    def from_distance(cls, R: float, direction: Sequence[float] = (0.0, 0.0, 1.0)) -> "SeparationGeometry":
        return cls(R, tuple(direction))

    @property
    def R_hat(self) -> np.ndarray:
        return np.asarray(self.direction)

    @property
    def R_vec(self) -> np.ndarray:
        return self.R * self.R_hat

    def with_distance(self, R: float) -> "SeparationGeometry":
        return SeparationGeometry(R, self.direction)


@dataclass(frozen=True)
class GeometryTensors:
    alpha: np.ndarray
    beta: np.ndarray


def make_tensors(geom: SeparationGeometry) -> GeometryTensors:
    n = geom.R_hat
    proj = np.outer(n, n)
    eye = np.eye(3)
    return GeometryTensors(alpha=eye - proj, beta=eye - 3.0 * proj)


def radiation_kernel(x: float, tensors: GeometryTensors) -> np.ndarray:
    """F_ij(x) as a dense 3x3 matrix; ``x = 0`` is refused."""
    if x == 0:
        raise Singularity("radiation kernel is not evaluated at kR = 0")
    s, c = np.sin(x), np.cos(x)
    return tensors.alpha * (s / x) + tensors.beta * (c / x**2 - s / x**3)


@dataclass(frozen=True)
class DipoleContractions:
    """U_ijpq contractions with the (4 pi eps0)^2 hbar Delta prefactor removed.

    ``s_bb``, ``s_ab``, ``s_aa`` carry the squared-dipole magnitudes (C^4 m^4);
    the ``unit_*`` properties give the same numbers per |mu_A|^2 |mu_B|^2.
    """

    s_bb: float
    s_ab: float
    s_aa: float
    mode: ContractionMode
    magnitude: float = 1.0  # |mu_A|^2 |mu_B|^2

    @property
    def unit_bb(self) -> float:
        return self.s_bb / self.magnitude

    @property
    def unit_ab(self) -> float:
        return self.s_ab / self.magnitude

    @property
    def unit_aa(self) -> float:
        return self.s_aa / self.magnitude


def _unit(v: Sequence[float]) -> np.ndarray:
    a = np.asarray(v, dtype=float)
    return a / np.linalg.norm(a)


def contract(
    tensors: GeometryTensors,
    mu_A: float,
    mu_B: float,
    dir_A: Sequence[float] | None = None,
    dir_B: Sequence[float] | None = None,
) -> DipoleContractions:
    """Contract U_ijpq = mu^A_i mu^A_q mu^B_j mu^B_p with the tensor pairs.

    ``None`` for a direction means that dipole is averaged over orientations.
    For a random unit vector <u_i u_q> = delta_iq / 3, so averaging both dipoles
    turns (a.M.b)(a.N.b) into M:N / 9; with beta:beta = 6, alpha:alpha = 2 and
    alpha:beta = tr(1 - P) = 2 this gives s_bb = 2/3 and s_aa = s_ab = 2/9 per
    |mu_A|^2 |mu_B|^2.  Averaging one dipole only gives (a.M.N.a)/3.
    """
    mag = float(mu_A) ** 2 * float(mu_B) ** 2
    al, be = tensors.alpha, tensors.beta
    if dir_A is None and dir_B is None:
        return DipoleContractions(2.0 / 3.0 * mag, 2.0 / 9.0 * mag, 2.0 / 9.0 * mag,
                                  "isotropic-average", mag)
    if dir_A is not None and dir_B is not None:
        a, b = _unit(dir_A), _unit(dir_B)
        ta, tb = a @ al @ b, a @ be @ b
        return DipoleContractions(tb * tb * mag, ta * tb * mag, ta * ta * mag,
                                  "fixed-orientation", mag)
    u = _unit(dir_A if dir_A is not None else dir_B)
    # M and N are symmetric, so which dipole is averaged does not matter here
    return DipoleContractions(
        (u @ be @ be @ u) / 3.0 * mag,
        (u @ al @ be @ u) / 3.0 * mag,
        (u @ al @ al @ u) / 3.0 * mag,
        "partial-average",
        mag,
    )
