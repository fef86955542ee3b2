"""Exception hierarchy.

Everything raised for physically or numerically invalid requests derives from
:class:`VdwError`, so the CLI can map it to exit code 1.
"""

from __future__ import annotations


class VdwError(Exception):
    """Base class for domain errors."""


class ConfigError(VdwError):
    """Malformed or physically invalid system description."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)


class DegenerateGeometry(VdwError):
    """Zero (or non-finite) interatomic separation."""


class DegenerateSystem(VdwError):
    """Identical transition frequencies (zero detuning)."""


class Singularity(VdwError):
    """Kernel requested at a point where it is not evaluated."""


class FarFieldDomain(VdwError):
    """Far-field formula requested with k*R below the threshold."""


class MultiLine(VdwError):
    """Per-line quantity requested for a multi-line B atom."""


class CausalityError(VdwError):
    """Observation time before the causality front for a T-dependent closure."""


class ContourAmbiguity(VdwError):
    """Sign of an exponent (and hence the closing half-plane) is undetermined."""


class NonConvergence(VdwError):
    """Quadrature did not reach the requested tolerance."""


class InsufficientResolution(VdwError):
    """Sampling too coarse for spectral analysis."""
