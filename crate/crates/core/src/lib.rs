//! Measurement-based steering of a two-qubit system towards an arbitrary
//! (pure or mixed) target state.
//!
//! The crate covers the whole pipeline: diagonalize the target and assign
//! detector couplings ([`protocol`]), evolve under the induced Lindbladian or
//! step-by-step blind measurements ([`lindblad`]), unravel into recorded
//! detector clicks ([`trajectory`]) and quantify the resulting correlations
//! ([`metrics`]). The `steerlab` binary wraps it all ([`cli`]).

pub mod cli;
pub mod error;
pub mod linalg;
pub mod lindblad;
pub mod metrics;
pub mod protocol;
pub mod state;
pub mod trajectory;

pub use error::{Error, Result, StateCheck};
pub use linalg::{ComplexMatrix, C64};
pub use lindblad::{
    build_liouvillian, evolve_discrete, evolve_master, spectral_gap, steady_state, EvolutionResult,
    Liouvillian,
};
pub use metrics::{
    concurrence, concurrence_family, discord_family, discord_numeric, family_state,
    fidelity_deviation, is_ppt_separable, FamilyParams,
};
pub use protocol::{
    assign_couplings, diagonalize_target, interaction_hamiltonian, jump_operators, MeasurementStep,
    OrthonormalBasis, ProtocolSchedule, TargetSpec,
};
pub use state::{partial_trace_detector, DensityMatrix, PureState};
pub use trajectory::{
    ensemble_average, run_trajectory, stochastic_step, EnsembleStats, Readout, TrajectoryRecord,
};
