//! Self-conformal dynamical systems: IFS geometry, Gibbs measures, certified
//! ball-measure brackets, symbolic orbits and shrinking-target counting.

pub mod config;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod gibbs;
pub mod ifs;
pub mod measure;
pub mod symbolic;

pub use error::{Error, Result};
