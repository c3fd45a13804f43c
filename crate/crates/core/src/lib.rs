//! Birkhoff-type integration of scalar functions against vector measures (and vector
//! functions against scalar measures) on finite and grid spaces, conditional
//! expectations, and a change of measure that turns a drifted scalar process into a
//! martingale with the original marginals.

pub mod birkhoff;
pub mod cli;
pub mod conditional;
pub mod config;
pub mod corpus;
pub mod error;
pub mod func;
pub mod girsanov;
pub mod measure;
pub mod report;
pub mod space;
pub mod vector;

pub use error::{BmgError, Result};
pub use vector::{Norm, VectorValue};
