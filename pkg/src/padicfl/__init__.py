"""Exact p-adic linear algebra at finite precision.

Computes with Z/p^N and its unramified extensions, truncated Witt
vectors, Smith normal forms over local principal ideal rings,
Fontaine-Laffaille modules with their H^0 / H^1 cohomology, and the
local L-factor measure identity, all in exact integer arithmetic.
"""

from .flmod import (
    FLModule,
    FLMorphism,
    FilteredPhiModule,
    cohomology,
    cokernel_flmod,
    connecting_delta,
    direct_sum,
    flmodule_from_json,
    flmodule_to_json,
    h0,
    h1,
    hodge_number,
    is_admissible,
    is_strongly_divisible,
    kernel_flmod,
    newton_number,
    tate_twist,
    tate_type_line,
    to_filtered_phi_module,
    unramified_line,
    validate,
)
from .linalg import (
    KMat,
    Mat,
    NormalFormResult,
    SemilinearMap,
    ZpModuleStructure,
    cokernel,
    kernel,
    relative_index,
    restrict_scalars,
    smith_normal_form,
)
from .measure import EulerFactor, MeasureReport, euler_factor, verify_measure_identity
from .padic import (
    PadicContext,
    PadicScalar,
    UnramifiedScalar,
    exact_divide_by_p,
    frobenius,
    make_context,
    valuation,
)
from .series import log_exp_roundtrip, t_over_p_series, unit_factor
from .witt import (
    WittVector,
    ghost,
    teichmuller,
    verschiebung,
    witt_add,
    witt_frobenius,
    witt_mul,
    witt_to_unramified,
)

__all__ = [
    "PadicContext", "PadicScalar", "UnramifiedScalar",
    "make_context", "valuation", "frobenius", "exact_divide_by_p",
    "WittVector", "ghost", "witt_add", "witt_mul", "teichmuller",
    "verschiebung", "witt_frobenius", "witt_to_unramified",
    "Mat", "KMat", "SemilinearMap", "NormalFormResult", "ZpModuleStructure",
    "smith_normal_form", "kernel", "cokernel", "restrict_scalars",
    "relative_index",
    "FLModule", "FilteredPhiModule", "FLMorphism",
    "validate", "hodge_number", "newton_number", "is_admissible",
    "is_strongly_divisible", "h0", "h1", "cohomology",
    "kernel_flmod", "cokernel_flmod", "connecting_delta",
    "direct_sum", "tate_twist", "unramified_line", "tate_type_line",
    "to_filtered_phi_module", "flmodule_from_json", "flmodule_to_json",
    "EulerFactor", "MeasureReport", "euler_factor", "verify_measure_identity",
    "t_over_p_series", "unit_factor", "log_exp_roundtrip",
]
