"""Typical landscape flatness of unstructured variational circuits.

The mean square of the objective over random entangling gates and uniform
parameters reduces to hitting probabilities of a random walk on I/S labels;
this package samples that walk, computes it exactly at small sizes, checks
it against Haar statevector simulation and evaluates closed-form bounds.
"""
from .bounds import (
    BoundReport,
    GradientBoundInputs,
    absorption_bound,
    gradient_interval,
    lower_1d,
    lower_general,
    upper_1d,
    upper_general,
)
from .circuit import (
    Architecture,
    ArchitectureError,
    backward_lightcone,
    brickwork_1d,
    gates_crossing,
    regular_connectivity,
    stats,
    validate,
)
from .hamiltonian import HamiltonianSpec, SupportPattern, operator_norm_bound, parse_clock_shift, parse_pauli
from .oracle import (
    OperatorBasis,
    exact_absorption_probability,
    exact_gx,
    exact_gx_enumeration,
    exact_second_moment,
    haar_first_moment,
    haar_gx,
)
from .walk import (
    EstimateReport,
    EstimatorConfig,
    estimate_gx,
    estimate_gx_unbiased,
    estimate_second_moment,
    run_biased,
)

__version__ = "0.1.0"
