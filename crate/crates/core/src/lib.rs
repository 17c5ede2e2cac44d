//! Numerical workbench for the large-`n` behaviour of Mallows partition
//! functions.
//!
//! Two independent computations are provided and compared:
//!
//! * exact and Monte-Carlo partition functions `L_n` and `D_n` over the
//!   symmetric group ([`partition`]);
//! * the Schrödinger bridge of the cost ([`bridge`]), the spectrum of its
//!   Markov integral operator and the constant `det(I - T^2)^{-1/2}`
//!   ([`spectral`]), together with the truncated series that connect the two
//!   ([`series`]).
//!
//! [`harness`] wires the stages together and writes machine-readable reports.

pub mod bridge;
pub mod costs;
pub mod harness;
pub mod numeric;
pub mod partition;
pub mod series;
pub mod spectral;
