"""Explicit residue-based division for tuples and matrices of polynomials.

Given an r x m matrix f of holomorphic polynomials that is surjective at
generic points of a ball, and an r-tuple phi in the image sheaf, the package
constructs an explicit solution psi of f psi = phi through weighted integral
representation: Hefer forms, regularized residue currents of Koszul or
determinantal type, and deterministic quadrature on the ball.  The same
kernels give Grothendieck residues, ideal membership tests and interpolation
operators.
"""

from .conventions import CONVENTION_VERSION
from .cpoly import MixedPoly
from .currents import (
    HoloMatrix,
    KoszulData,
    ENData,
    eps_schedule,
    extrapolate,
    default_residue_rule,
    residue_pairing,
    residue_pairing_en,
    grothendieck_residue,
)
from .divider import (
    ProblemError,
    ProblemSpec,
    WeightConfig,
    QuadConfig,
    EpsConfig,
    DivisionReport,
    InterpolationReport,
    BerndtssonReport,
    MembershipReport,
    ObstructionTable,
    reproduce,
    divide_koszul,
    divide_matrix,
    solve,
    interpolate,
    berndtsson_divide,
    hefer_via_szego,
    membership_test,
    smooth_obstruction,
)
from .hefer import hefer_decompose, hefer_form, build_koszul_family, build_en_family

__version__ = "0.1.0"

__all__ = [
    "CONVENTION_VERSION",
    "__version__",
    "MixedPoly",
    "HoloMatrix",
    "KoszulData",
    "ENData",
    "eps_schedule",
    "extrapolate",
    "default_residue_rule",
    "residue_pairing",
    "residue_pairing_en",
    "grothendieck_residue",
    "ProblemError",
    "ProblemSpec",
    "WeightConfig",
    "QuadConfig",
    "EpsConfig",
    "DivisionReport",
    "InterpolationReport",
    "BerndtssonReport",
    "MembershipReport",
    "ObstructionTable",
    "reproduce",
    "divide_koszul",
    "divide_matrix",
    "solve",
    "interpolate",
    "berndtsson_divide",
    "hefer_via_szego",
    "membership_test",
    "smooth_obstruction",
    "hefer_decompose",
    "hefer_form",
    "build_koszul_family",
    "build_en_family",
]
