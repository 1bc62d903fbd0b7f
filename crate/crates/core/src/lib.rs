//! Truncated Fock-space simulation of photon catalysis, SSV breeding and
//! GKP grid-state synthesis.

pub mod breeding;
pub mod catalysis;
pub mod error;
pub mod fock;
pub mod gaussian;
pub mod io;
pub mod math;
pub mod optimize;
pub mod targets;
pub mod wigner;

pub use error::{Error, Result};
