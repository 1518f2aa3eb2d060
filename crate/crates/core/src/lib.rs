//! Penalized maximum likelihood over `eps`-discretized parameter spaces, Bhattacharyya
//! risk certificates, and Monte Carlo / brute-force verification of both.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod estimator;
pub mod grid;
pub mod models;
pub mod numeric;
pub mod quadrature;
pub mod verify;

pub use error::{Error, Result};
pub use estimator::{CodelengthMode, Fit, PenalizedMle, Penalty, PseudoPenalty};
pub use grid::{EpsGrid, GridPoints, Lattice, ParamBox, RadialEnvelope};
pub use models::{DataSample, Family, Member};
