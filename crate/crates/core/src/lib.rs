//! Circuit construction, verification and shot sampling for single-qubit and
//! collective two-qubit amplitude damping, with master-equation oracles.

pub mod channels;
pub mod error;
pub mod experiment;
pub mod gates;
pub mod lindblad;
pub mod sampler;
pub mod spin;
pub mod tensor;

pub use error::{Error, Result};
