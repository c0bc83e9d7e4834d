//! Numerical toolkit for symmetric barrier billiards: the exact transfer
//! operator and its asymptotics, intermediate-statistics random unitary
//! ensembles, spectral statistics, the periodic-orbit trace formula and
//! spectrum computation from the secular equation.

pub mod ensembles;
pub mod error;
pub mod linalg;
pub mod numeric;
pub mod quantization;
pub mod rng;
pub mod stats;
pub mod trace;
pub mod transfer;
pub mod wiener_hopf;

pub use error::{Error, Result};
