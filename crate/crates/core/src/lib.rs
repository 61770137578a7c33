//! Finite sections of shift and band operators on `l²(Γ)` for finitely
//! generated groups `Γ`: Cayley-ball geometry, exact matrix identities for
//! the section algebra, stability scans, limit-operator certificates along
//! inverse geodesic paths and inflating-sequence constructions.

pub mod cli;
pub mod config;
pub mod error;
pub mod group;
pub mod inflate;
pub mod limits;
pub mod operator;
pub mod sets;
pub mod spectral;

pub use error::{Error, Result};
