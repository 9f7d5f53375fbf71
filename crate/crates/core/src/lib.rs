//! Simulation and numerics for Fleming-Viot particle systems driven by
//! isotropic α-stable motion.
//!
//! The crate is organised bottom-up: exact samplers for the motion
//! ([`stable_motion`]), deterministic Fourier numerics for its kernel and
//! semigroup ([`analytics`]), an event-driven Moran particle system
//! ([`moran`]), the ancestral-lineage store built alongside it
//! ([`genealogy`]) and an ensemble harness for the scaling limits ([`lab`]).

pub mod analytics;
pub mod error;
pub mod genealogy;
pub mod lab;
pub mod moran;
pub mod multi_index;
pub mod quadrature;
pub mod rng;
pub mod special;
pub mod stable_motion;
pub mod test_function;

pub use error::{Error, Result};
pub use multi_index::MultiIndex;
pub use rng::RngStream;
pub use stable_motion::{Regime, StableParams};
pub use test_function::TestFunction;
