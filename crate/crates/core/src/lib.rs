//! Photonic entanglement distillation with Gisin local filters, including
//! recycling of the photons a filter reflects.
//!
//! An EPR pair `|Φ⁺⟩` is sent through identical amplitude-damping channels
//! ([`channel`]), filtered by one- or two-tier POVM filters ([`filtering`]),
//! and scored by fidelity and entanglement measures ([`metrics`]). The filter
//! parameters are chosen by fidelity-constrained yield maximization
//! ([`optimize`]), and [`experiment`] sweeps the damping factor to compare the
//! single-filter benchmark with recycling.

pub mod channel;
pub mod cli;
pub mod error;
pub mod experiment;
pub mod filtering;
pub mod metrics;
pub mod optimize;
pub mod qmath;

pub use channel::{DampingParams, DensityMatrix};
pub use error::{Error, Result};
pub use experiment::{SweepRow, SweepSpec, SweepStatus};
pub use filtering::{FilterScheme, OutcomeLabel, OutcomeRecord, Povm, SchemeKind};
pub use optimize::{FilterSolution, OptimizerConfig, RecyclePolicy};
pub use qmath::ComplexMatrix;
