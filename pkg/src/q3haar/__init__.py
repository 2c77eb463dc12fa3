"""Exact Haar-random two- and three-qubit pure states from minimal-CNOT circuits.

The package provides:

- dense state-vector primitives (:mod:`q3haar.statevec`),
- the two circuit templates and state builders (:mod:`q3haar.circuits`),
- the closed-form angle densities (:mod:`q3haar.density`),
- a Fubini-Study metric oracle certifying the densities (:mod:`q3haar.fsmetric`),
- seeded samplers for all angles plus a Gaussian Haar oracle (:mod:`q3haar.sampler`),
- angle extraction from arbitrary states (:mod:`q3haar.extract`),
- statistical verification suites (:mod:`q3haar.stats`),
- a command-line interface (:mod:`q3haar.cli`).
"""

from .statevec import (
    StateVector,
    GateOp,
    apply_gate,
    fidelity,
    fubini_study_distance,
    reduced_purity,
    basis_state,
)
from .circuits import (
    THREE_QUBIT,
    TWO_QUBIT,
    THETA14_RANGES,
    THETA6_RANGES,
    three_qubit_template,
    two_qubit_template,
    build_state_3q,
    build_state_2q,
    intermediate_state_3q,
)
from .density import (
    alpha_beta,
    joint_density_3456,
    density_theta1,
    density_theta2,
    density_tail_factors,
    density_full_14,
    density_2q,
)
from .fsmetric import metric_tensor, volume_density, check_proportionality

__version__ = "0.1.0"
