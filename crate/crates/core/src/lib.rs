//! Rigorous bounds for the intensity, correlation functions and F/G/K summary statistics
//! of stationary inhibitory pairwise interaction point processes, together with a
//! simulation and estimation engine to check them.

pub mod bounds;
pub mod error;
pub mod estimate;
pub mod grid;
pub mod io;
pub mod model;
pub mod quadrature;
pub mod rng;
pub mod simulate;
pub mod specfun;

pub use error::{Error, Result};
