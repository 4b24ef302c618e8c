"""Statevector toolkit for the critical Ising chain with a duality-defect
impurity: quantum-natural-gradient ground-state preparation, Hadamard-test
measurement protocols, braid loop operators, and zero-noise extrapolation."""

__version__ = "0.1.0"

from .ansatz import (
    AnsatzSpec,
    gate_generators,
    gates,
    init_params,
    parameter_count,
    prepare_state,
    prepare_truncated,
)
from .measure import (
    EstimateRecord,
    Prefix,
    ShotPlan,
    circuit_rng,
    estimates_to_csv,
    gradient_shot,
    hadamard_test,
    metric_shot,
    sample_pauli_expectation,
)
from .model import (
    ModelParams,
    SpectrumResult,
    build_hamiltonian,
    defect_coefficients,
    dense_matrix,
    energy_scan,
    energy_scan_csv,
    exact_ground,
)
from .observables import (
    BraidOperator,
    LoopOperator,
    correlator_csv,
    correlator_profile,
    correlator_profile_shot,
    correlator_zz,
    sector_projector,
    spin_flip_string,
    ybar_exact,
    ybar_hadamard,
    ybar_result,
)
from .paulis import PauliString, WeightedPauliSum, commutator_norm
from .qng import (
    OptimizeOptions,
    OptimizerState,
    TraceRow,
    derivative_state,
    gradient_exact,
    metric_exact,
    optimize,
    qng_step,
    trace_to_csv,
)
from .statevector import RotationGate, StateVector, expectation, inner, plus_state
from .zne import (
    Circuit,
    NoiseModel,
    ZneSchedule,
    ansatz_circuit,
    extrapolate,
    fold_gates,
    noiseless_expectation,
    noisy_expectation,
    zne_pipeline,
)

__all__ = [name for name in dir() if not name.startswith("_")]
