"""Fractional-order epidemic simulation toolkit.

The package solves compartment models whose time derivatives have
non-integer order (left Riemann-Liouville sense, lower terminal 0) by
expanding the fractional operator into integer-order terms plus auxiliary
moment variables, turning the problem into an ordinary system that a
fixed-step RK4 integrator handles.  An independent Grunwald-Letnikov
discretization of the same operator cross-validates the expansion route,
and a grid-search fitter recovers the order that best matches observed
infective counts.

Main entry points:

    default_scenario()       the baseline dengue outbreak setup
    simulate_classical(...)  integer-order run
    simulate_fractional(...) fractional-order run via the expansion
    gl_simulate(...)         fractional-order run via backward differences
    fit_alpha(...)           exhaustive search for the best order
"""

from .dengue import (ModelParams, StateVector, classical_rhs, default_scenario,
                     population_drift)
from .expansion import (AugmentedVectorField, DegenerateCoefficientError,
                        ExpansionCoefficients, ExpansionConfig, PoleError,
                        SampledFunction, approx_rl_derivative, coeff_a,
                        coeff_a_prime, coeff_c, expand_system, gamma)
from .fitting import (CurvePoint, FitFailedError, FitResult, ObservedSeries,
                      fit_alpha, generate_synthetic, percentage_error)
from .grunwald import (GlWeights, gl_derivative_at, gl_simulate, gl_weights,
                       power_rule_exact)
from .integrate import (BlowUpError, TimeGrid, TimeSeries, integrate_rk4,
                        simulate_classical, simulate_fractional)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "AugmentedVectorField",
    "BlowUpError",
    "CurvePoint",
    "DegenerateCoefficientError",
    "ExpansionCoefficients",
    "ExpansionConfig",
    "FitFailedError",
    "FitResult",
    "GlWeights",
    "ModelParams",
    "ObservedSeries",
    "PoleError",
    "SampledFunction",
    "StateVector",
    "TimeGrid",
    "TimeSeries",
    "approx_rl_derivative",
    "classical_rhs",
    "coeff_a",
    "coeff_a_prime",
    "coeff_c",
    "default_scenario",
    "expand_system",
    "fit_alpha",
    "gamma",
    "generate_synthetic",
    "gl_derivative_at",
    "gl_simulate",
    "gl_weights",
    "integrate_rk4",
    "percentage_error",
    "population_drift",
    "simulate_classical",
    "simulate_fractional",
]
