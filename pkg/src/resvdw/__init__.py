"""Time-dependent quasi-resonant van der Waals interaction between dissimilar two-level atoms.

Three independent evaluation paths share one system description:

* :mod:`resvdw.closed_form` - the analytic energy,
* :mod:`resvdw.contour` - residue calculus over the frequency double integral,
* :mod:`resvdw.quadrature` - fully numerical principal-value quadrature.
"""

from __future__ import annotations

from .atoms import (
    PairSystem,
    RegimeReport,
    TransitionLine,
    dump_system,
    fig3_system,
    load_system,
    validate_regime,
)
from .closed_form import (
    EnergyResult,
    energy_adiabatic,
    energy_far_field,
    energy_full,
    excitation_probability,
)
from .contour import compare_prescriptions, evaluate_causal, evaluate_prescription, evaluate_term
from .dataset import Dataset
from .errors import VdwError
from .geometry import SeparationGeometry, contract, make_tensors, radiation_kernel
from .quadrature import QuadratureConfig, energy_quadrature, pv_integral_1d, pv_integral_2d_coupled
from .scan import ScanSpec, beat_analysis, scan, time_average

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "EnergyResult",
    "PairSystem",
    "QuadratureConfig",
    "RegimeReport",
    "ScanSpec",
    "SeparationGeometry",
    "TransitionLine",
    "VdwError",
    "beat_analysis",
    "compare_prescriptions",
    "contract",
    "dump_system",
    "energy_adiabatic",
    "energy_far_field",
    "energy_full",
    "energy_quadrature",
    "evaluate_causal",
    "evaluate_prescription",
    "evaluate_term",
    "excitation_probability",
    "fig3_system",
    "load_system",
    "make_tensors",
    "pv_integral_1d",
    "pv_integral_2d_coupled",
    "radiation_kernel",
    "scan",
    "time_average",
    "validate_regime",
]
