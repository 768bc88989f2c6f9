//! Classical dense-matrix simulator for Lindblad dynamics at desk scale
//! (1-10 qubits): randomized product-formula channels, Davies-type Gibbs
//! samplers built from random jumps, and the spectral diagnostics that
//! certify their convergence.

pub mod davies;
pub mod error;
pub mod hamiltonians;
pub mod linalg;
pub mod lindblad;
pub mod metrics;
pub mod qdrift;
pub mod stream;

pub use error::{Result, SimError};
