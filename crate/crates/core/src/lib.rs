//! Referees, strategy constructions and fractal checks for Schmidt-type
//! games on the dyadic real line and the binary shift.

pub mod cantor;
pub mod cli;
pub mod engine;
pub mod error;
pub mod fractal;
pub mod scalar;
pub mod space;
pub mod strategies;

pub use error::{Error, Player, Result};
pub use scalar::{ExactScalar, GradedScalar};
pub use space::{Ball, SpaceTag, SplittingStructure, StandardSplitting};
