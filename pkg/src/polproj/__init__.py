"""Tunable two-photon entangling projector: operators, Fock oracle, tomography and Hardy analysis."""
from .states import (
    SINGLET,
    TwoPhotonState,
    concurrence_mixed,
    concurrence_pure,
    operator_fidelity,
    schmidt_decompose,
)
from .optics import (
    ProjectorRecipe,
    VppbsSettings,
    compose_projector,
    optimal_efficiency,
    optimal_settings,
    synthesize_projector,
)
from .fock import oracle_povm
from .tomography import probe_states, reconstruct, sweep_reconstruction
from .hardy import conditional_inference, hardy_angles, hardy_inequality, table_i_counts
from .expsim import NoiseModel, coincidence_vs_delay, noisy_povm

__version__ = "0.1.0"
