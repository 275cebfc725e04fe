//! Tabular solvers for two-player zero-sum extensive-form games.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`, which is what the harness uses.

pub mod error;
pub mod eval;
pub mod game;
pub mod regularizers;
pub mod scalar;
pub mod solvers;
pub mod values;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Tree = game::GameTree<f64>;
pub type Profile = game::BehavioralProfile<f64>;
pub type SeqStrategy = game::SequenceFormStrategy<f64>;
pub type Regularizer = regularizers::RegularizerSpec<f64>;
pub type Simplex = regularizers::PerturbedSimplex<f64>;
