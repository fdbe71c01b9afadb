//! Identification of strictly stable linear dynamical systems
//! `x_{t+1} = A* x_t + η_{t+1}` from a single trajectory by constrained
//! least squares, together with the complexity quantities that govern its
//! error and a Monte-Carlo harness for checking the predicted rates.

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod estimators;
pub mod exec;
pub mod experiments;
pub mod geometry;
pub mod json;
pub mod linalg;
pub mod quadrature;
pub mod rng;

pub use error::{Error, Result};
