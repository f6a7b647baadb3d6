//! Dynamic inverse problems regularized by unbalanced optimal transport.

pub mod energy;
pub mod error;
pub mod grid;
pub mod meas;
pub mod phantom;
pub mod random;
pub mod solver;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

// double precision aliases
pub type Grid64 = grid::Grid<f64>;
pub type StaggeredTriple64 = grid::StaggeredTriple<f64>;
pub type CenteredTriple64 = grid::CenteredTriple<f64>;
pub type Delta64 = energy::Delta<f64>;
pub type EnergyParams64 = energy::EnergyParams<f64>;
pub type Measurement64 = meas::Measurement<f64>;
pub type CoilSet64 = meas::CoilSet<f64>;
pub type SamplingPattern64 = meas::SamplingPattern<f64>;
pub type MriOperator64 = meas::MriOperator<f64>;
pub type IdentityOperator64 = meas::IdentityOperator<f64>;
pub type PhantomSpec64 = phantom::PhantomSpec<f64>;
pub type Phantom64 = phantom::Phantom<f64>;
pub type SolverConfig64 = solver::SolverConfig<f64>;
pub type SolverOutput64 = solver::SolverOutput<f64>;
