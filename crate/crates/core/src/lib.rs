//! Pseudospectral solver for the quasi-relativistic Navier–Stokes model on
//! the periodic box `[0, 2π)³`, with the energy and well-posedness audits
//! that accompany it.
//!
//! The numerical core is generic over the floating-point scalar
//! ([`Real`], implemented for `f32` and `f64`); the `*64`/`*32` aliases
//! below fix the scalar for the common cases.

pub mod diagnostics;
pub mod error;
pub mod fft;
pub mod field;
pub mod io;
pub mod lattice;
pub mod ops;
pub mod scalar;
pub mod timestepper;

pub use diagnostics::{
    audit_dissipation_integral, audit_energy_inequality, audit_gronwall_sup, audit_speed_bound,
    audit_trilinear_bound, convergence_study, low_speed_consistency, run_audits, uniqueness_probe,
    AuditConstants, AuditResult, EnergyRecord,
};
pub use error::{Error, Result};
pub use field::{NormSet, PhysicalField, SpectralField, SpectralScalar, SpectralTensor};
pub use io::{
    parse_config, read_records, read_snapshot, write_records, write_snapshot, Snapshot,
    SnapshotMeta,
};
pub use lattice::Lattice;
pub use ops::{
    bilinear_a, convection_term, lipschitz_gap, lipschitz_sweep, recover_pressure,
    relativistic_map, relativistic_velocity, trilinear_b, velocity_lipschitz_gap, ConvectionMode,
    LipschitzGap, LipschitzSweep, ModelParams, Pseudospectral,
};
pub use scalar::Real;
pub use timestepper::{
    realize_initial, simulate, ForcingSpec, InitialSpec, RunOptions, RunOutput, RunStatus,
    SimConfig, SimState, Solver,
};

pub type SpectralField64 = SpectralField<f64>;
pub type SpectralField32 = SpectralField<f32>;
pub type PhysicalField64 = PhysicalField<f64>;
pub type PhysicalField32 = PhysicalField<f32>;
pub type Solver64 = Solver<f64>;
pub type Solver32 = Solver<f32>;
pub type SimState64 = SimState<f64>;
pub type SimState32 = SimState<f32>;
