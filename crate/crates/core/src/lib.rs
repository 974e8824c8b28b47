//! Linear-optical quantum computing bench.
//!
//! Polarization qubits, a Fock-space propagator over named optical paths,
//! component physics, measurement and the canned experiments built on top.

pub mod bench;
pub mod error;
pub mod experiments;
pub mod fock;
pub mod measure;
pub mod optics;
pub mod rng;
pub mod scene;
pub mod state;

pub use error::{Error, ErrorKind, Result};
