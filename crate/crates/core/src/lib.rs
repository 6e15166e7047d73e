#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blowup;
pub mod config;
pub mod error;
pub mod evolution;
pub mod frac_ops;
pub mod linear;
pub mod mittag_leffler;
pub mod quadrature;
pub mod reaction;
pub mod scalar;
pub mod spectral;
pub mod suite;
pub mod system;

pub use error::{Error, Result};

pub type MlParams = mittag_leffler::MlParams<f64>;
pub type TimeGrid = frac_ops::TimeGrid<f64>;
pub type Signal = frac_ops::Signal<f64>;
pub type DomainSpec = spectral::DomainSpec<f64>;
pub type ModeBasis = spectral::ModeBasis<f64>;
pub type Field = spectral::Field<f64>;
pub type KernelConfig = evolution::KernelConfig<f64>;
pub type LinearProblem = linear::LinearProblem<f64>;
pub type SolutionHistory = linear::SolutionHistory<f64>;
pub type TruncationCutoff = reaction::TruncationCutoff<f64>;
pub type SolverOptions = system::SolverOptions<f64>;
pub type SystemSolution = system::SystemSolution<f64>;
pub type BlowupConfig = blowup::BlowupConfig<f64>;
