"""Exact recursive-transport distance tables and tight residual bounds for
generalized averaged (Krasnosel'skii-Mann type) fixed-point iterations."""

from .exactnum import (NewtonInterpolator, Poly, Rational, format_rational,
                       harmonic, interpolate, parse_rational)
from .metric import (DistanceTable, PropertyReport, ResidualSeries, Witness,
                     build_table, halpern_recursion_check, inside_out,
                     kras_residual_identity, residual_bounds, verify_metric,
                     verify_monotone, verify_quadrangle)
from .parametric import (ParamFamily, PolyResult, Target, asymptotics,
                         degree_profile, fit_polynomial, hypergeom_bound,
                         sqrt_bound_check)
from .schemes import (CompositeRule, Scheme, Verdict, WeightRow,
                      check_distinct, check_dominance, check_drift,
                      flatten_composite, load_scheme_file, parse_scheme)
from .tightness import (OrbitWitness, build_witness, verify_distance_tightness,
                        verify_residual_tightness)
from .transport import (DualPotential, TransportPlan, make_simple,
                        mcshane_extend, plan_properties, solve_dual,
                        solve_transport, uncross,
                        verify_complementary_slackness)

__version__ = "0.1.0"

__all__ = [
    "CompositeRule", "DistanceTable", "DualPotential", "NewtonInterpolator",
    "OrbitWitness", "ParamFamily", "Poly", "PolyResult", "PropertyReport",
    "Rational", "ResidualSeries", "Scheme", "Target", "TransportPlan",
    "Verdict", "WeightRow", "Witness", "asymptotics", "build_table",
    "build_witness", "check_distinct", "check_dominance", "check_drift",
    "degree_profile", "fit_polynomial", "flatten_composite", "format_rational",
    "halpern_recursion_check", "harmonic", "hypergeom_bound", "inside_out",
    "interpolate", "kras_residual_identity", "load_scheme_file", "make_simple",
    "mcshane_extend", "parse_rational", "parse_scheme", "plan_properties",
    "residual_bounds", "solve_dual", "solve_transport", "sqrt_bound_check",
    "uncross", "verify_complementary_slackness", "verify_distance_tightness",
    "verify_metric", "verify_monotone", "verify_quadrangle",
    "verify_residual_tightness",
]
