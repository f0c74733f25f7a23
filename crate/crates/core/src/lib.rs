//! Liu-type pretest and Stein shrinkage estimation for linear models whose
//! regressors split into a main block and a nuisance block.

pub mod application;
pub mod asymptotics;
pub mod distributions;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod model;
pub mod penalized;
pub mod rng;
pub mod simulation;

pub use error::{Error, Result};
