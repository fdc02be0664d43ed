"""Simulator and pulse-optimization toolkit for adiabatic population
transfer between microwave-dressed spin states in a lambda system."""

from .errors import (
    CapExceeded,
    ConfigError,
    DegenerateDressing,
    DegenerateEnvelope,
    DimMismatch,
    DressedStirapError,
    NegativeRadicand,
    NotHermitian,
    StepSizeUnderflow,
    ToleranceNotMet,
    ZeroDetuning,
)
from .model import (
    PREP_PHASE,
    READ_PHASE,
    DressedPair,
    PhysicsConfig,
    dressed_states,
    hamiltonian,
    jump_operators,
    ket,
    mw_frame_rotation,
    nonadiabatic_rate,
    pi_half_pulse,
)
from .lindblad import (
    SolverOptions,
    Trajectory,
    lindblad_rhs,
    mw_drive_propagate,
    propagate,
    transfer_efficiency,
    transfer_run,
    write_trajectory_csv,
)
from .pulses import (
    BaseStirapShape,
    CrabParams,
    EffectiveTwoLevel,
    GaussianEnvelope,
    PulsePair,
    TabulatedEnvelope,
    counter_diabatic,
    crab_pulse,
    default_satd_pulses,
    effective_two_level,
    gaussian_stirap_base,
    invert_effective,
    read_pulse_csv,
    satd_base_for_cap,
    satd_modify,
    satd_pipeline,
    write_pulse_csv,
)
from .crab_opt import (
    ObjectiveSpec,
    OptimizerBudget,
    OptimizerReport,
    ReferencePulse,
    default_objective,
    evaluate,
    find_reference_pulse,
    joint_evaluate,
    optimize,
    optimize_joint,
)
from .ensemble import (
    ALL_STAGES,
    BARE_TRANSFER,
    INIT_AND_TRANSFER,
    READOUT_AND_TRANSFER,
    TRANSFER_ONLY,
    DephasingModel,
    EnsembleResult,
    Histogram,
    RunVariant,
    histogram,
    run_ensemble,
    run_once,
    sample_delta,
    sweep_detuning,
    sweep_sigma,
)

__version__ = "0.1.0"
