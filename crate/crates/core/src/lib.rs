//! Numerics for the mean-field self-interacting walk on the complete graph:
//! effective potential, phase diagram, finite-`N` observables, large-`N`
//! laws and a Monte Carlo cross-check.

// `!(x > 0.0)` is used on purpose: it also rejects NaN. Tabulated
// constants keep every published digit.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod asymptotics;
pub mod curves;
pub mod error;
pub mod finite_n;
pub mod mc_walk;
pub mod model;
pub mod phase;
pub mod potential;
pub mod quadrature;
pub mod specfun;
pub mod verify;

pub use error::{Error, ModelError, QuadError, Result};
pub use model::{make_polynomial_interaction, Interaction, ModelParams, PolynomialInteraction};
