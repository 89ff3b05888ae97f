//! Two-level avoided-crossing dynamics under continuous weak population
//! measurement.
//!
//! The crate propagates a 2x2 density matrix through a linear sweep while
//! either the fixed-basis ("diabatic") or the instantaneous-eigenstate
//! ("adiabatic") populations are weakly monitored. Nonselective monitoring
//! enters as a Lindblad dephasing term `-(lambda/2) [A, [A, rho]]`; the same
//! physics is reproduced independently by a discrete Gaussian Kraus-operator
//! scheme, which serves as the oracle for the master-equation path.
//!
//! Layout:
//! - [`algebra`]: exact 2x2 complex algebra, state validation
//! - [`model`]: Hamiltonians, frame transformation, gauge term, closed forms
//! - [`dynamics`]: master-equation right-hand sides and fixed-step RK4
//! - [`kraus`]: single-shot measurement updates and discrete propagation
//! - [`experiments`]: sweeps, asymptotes, decay fits, dataset collection
//! - [`io`]: byte-stable CSV/JSON/SVG emission
//! - [`acceptance`]: the end-to-end validation suite behind `lzsim validate`
//!
//! Sweep cells run in parallel via rayon when the `parallel` feature
//! (default) is enabled; disabling it leaves a sequential fallback with
//! identical output.

pub mod algebra;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod io;
pub mod kraus;
pub mod model;

pub mod acceptance;

pub use algebra::{
    commutator, dephasing_term, validate_density, Basis, DensityMatrix, Operator,
    StateDiagnostics,
};
pub use dynamics::{
    frame_consistency_error, integrate, rhs_adiabatic, rhs_diabatic, rhs_static, rk4_step,
    Protocol, SimConfig, Trajectory, TrajectoryPoint,
};
pub use error::{Error, Result};
pub use experiments::{
    extract_asymptote, find_nonmonotonicity, fit_decay_rate, reproduce_figure, sweep,
    sweep_with_mode, ExecMode, FigureId, SweepCell, SweepResult, SweepSpec,
};
pub use kraus::{
    discrete_propagate, measurement_pdf, nonselective_channel, projective_zeno_simulate,
    selective_update, unitary_step, GaussianMeasurement,
};
pub use model::{
    adiabatic_energies, approx_coherence, freeze_estimate, gauge_term_m, hamiltonian_diabatic,
    lz_survival_probability, mixing_angle, strong_measurement_rate, to_adiabatic, to_diabatic,
    transform_u, zeno_projective_survival, LzParams, MixingAngle,
};
