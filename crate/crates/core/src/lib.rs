//! Simulation of the semilinear wave equation (∂t² − Δ + V)u = b|u|^{p−1}u in
//! three space dimensions with a radial potential V = χ(r)/r², together with
//! numerical checks of the weighted inequalities and energy identities that
//! control its small-data theory.

pub mod energy;
pub mod error;
pub mod grids;
pub mod harmonics;
pub mod inequalities;
pub mod nonlinear;
pub mod picard;
pub mod potential;
pub mod radial;

pub use error::{Error, Result};
