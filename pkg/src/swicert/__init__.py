"""Stability certificates for switched linear systems under constrained switching."""

from swicert.certifier import Certificate, certify, envelope_check, psi, psi_trace, theorem_lhs, theorem_rhs
from swicert.densities import (
    DensityBundle,
    Expression,
    Provenance,
    SignalProfile,
    bundle_direct,
    densities_empirical,
    densities_from_profile,
)
from swicert.family import (
    LyapunovPair,
    MuTable,
    StabilityClass,
    SystemFamily,
    classify,
    lipschitz_constant,
    mu_estimate,
    mu_table,
    synth_pair,
    synthesize_family,
    uniformity_constant,
)
from swicert.signal import HFunction, SwitchingSignal, TransitionGraph
from swicert.simulator import Trajectory, simulate

__version__ = "0.1.0"
