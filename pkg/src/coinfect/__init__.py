"""Equilibrium, stability and carrying-capacity analysis of a two-strain
SIR coinfection model with logistic growth."""
from .branch import continuity_check, scenario_classify, thresholds, transition_diagram
from .equilibria import (
    EquilibriumPoint,
    all_equilibria,
    boundary_equilibria,
    coexistence_points,
    coexistence_polynomial,
    single_strain,
)
from .estimator import CoinfectionSIR
from .params import (
    ParamSet,
    ScaledParamSet,
    ValidatedParamSet,
    derive,
    load_params,
    materialize_scaled,
    validate,
)
from .simulate import integrate
from .stability import closed_form_verdict, eigen_classify, jacobian, stable_equilibrium

__version__ = "0.1.0"

__all__ = [
    "CoinfectionSIR",
    "EquilibriumPoint",
    "ParamSet",
    "ScaledParamSet",
    "ValidatedParamSet",
    "all_equilibria",
    "boundary_equilibria",
    "closed_form_verdict",
    "coexistence_points",
    "coexistence_polynomial",
    "continuity_check",
    "derive",
    "eigen_classify",
    "integrate",
    "jacobian",
    "load_params",
    "materialize_scaled",
    "scenario_classify",
    "single_strain",
    "stable_equilibrium",
    "thresholds",
    "transition_diagram",
    "validate",
]
