"""Functionals of the rescaled flow and the identity residual suite."""

from .functionals import (
    ENERGY_FLOOR,
    SERIES_COLUMNS,
    CheckResult,
    DiagnosticsRecord,
    EnergyPinching,
    LojasiewiczFit,
    NdotBound,
    decay_lower_bound_check,
    defect_evolution,
    defect_sup_norms,
    dirichlet_quotient,
    energy,
    energy_pinching,
    energy_rate,
    energy_rate_integrated,
    gaussian_area,
    integrability_tail,
    lojasiewicz_probe,
    measure,
    monotonicity_residual,
    ndot_bound,
    ndot_from_series,
    ndot_lower_bound_check,
)
from .identities import (
    IDENTITIES,
    IdentityContext,
    IdentityReport,
    IdentitySpec,
    MaterialWindow,
    evaluate_identity,
    identity_residual,
    list_identities,
    lookup,
    refinement_order,
    run_identity_suite,
)

__all__ = [
    "ENERGY_FLOOR",
    "SERIES_COLUMNS",
    "CheckResult",
    "DiagnosticsRecord",
    "EnergyPinching",
    "LojasiewiczFit",
    "NdotBound",
    "decay_lower_bound_check",
    "defect_evolution",
    "defect_sup_norms",
    "dirichlet_quotient",
    "energy",
    "energy_pinching",
    "energy_rate",
    "energy_rate_integrated",
    "gaussian_area",
    "integrability_tail",
    "lojasiewicz_probe",
    "measure",
    "monotonicity_residual",
    "ndot_bound",
    "ndot_from_series",
    "ndot_lower_bound_check",
    "IDENTITIES",
    "IdentityContext",
    "IdentityReport",
    "IdentitySpec",
    "MaterialWindow",
    "evaluate_identity",
    "identity_residual",
    "list_identities",
    "lookup",
    "refinement_order",
    "run_identity_suite",
]
