"""Simulator for single-photon two-qubit logic on momentum and polarization.

A momentum-entangled down-conversion pair is sent through a SWAP gate made
of three CNOTs on each photon, moving the entanglement into polarization.
The package computes the output state exactly, adds calibrated coherence
loss, and produces fringe sweeps and CHSH measurements either exactly or
with Poisson counting statistics.
"""

from ._validation import (
    DegenerateError,
    DimensionError,
    InconsistentBudgetError,
    NotPhysicalError,
    PeriodMismatchError,
    SptqError,
    UnderdeterminedFitError,
)
from .experiment import (
    CountsRecord,
    FitResult,
    FringeFitter,
    accidental_rate,
    fit_fringe,
    measure_chsh,
    run_experiment,
    simulate_counts,
)
from .gates import GateOp, circuit, hwp_jones, m_cnot, p_cnot, path_waveplate, swap_gate
from .hilbert import apply_to_photon, partial_trace, state_fidelity, tensor
from .measurement import (
    AnalyzerSetting,
    ChshSettings,
    chsh_S,
    coincidence_probability,
    correlation_E,
    optimize_chsh,
    standard_chsh_settings,
    sweep_curve,
)
from .noise import (
    GateNoise,
    classical_gate_visibility,
    decompose_fidelity,
    dephase_subsystem,
    imperfect_swap_pipeline,
)
from .scenario import ExperimentConfig, Scenario, load_scenario, parse_scenario
from .source import SourceParams, classical_probe_state, noisy_source, spdc_pair_state

__version__ = "0.1.0"
